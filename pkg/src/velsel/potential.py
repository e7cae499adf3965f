"""Composed 1-D selection potential: linear magnetic slope plus a Gaussian
optical barrier, and the stationary structure of the resulting well.

Sign convention: the slope pushes atoms toward -z. The well sits on the
+z (uphill) side of the barrier, so ``z_top < z_min`` always.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .physics import RB85, PhysicalConstants

# bracket scan half-width and resolution, in barrier waists
SCAN_HALF_WIDTH = 6.0
SCAN_STEPS_PER_WAIST = 200
# stationary points are refined far below the nominal 1e-10 m so that the
# force at them vanishes to rounding level
_XTOL = 1e-22


@dataclass(frozen=True)
class PotentialConfig:
    U_prime: float  # J/m
    barrier_height: float  # J, raw optical barrier
    barrier_center: float = 0.0  # m
    barrier_waist: float = 6e-6  # m, 1/e^2 radius
    trap_offset: float = 0.0  # m, B_b/B'; bookkeeping only

    def __post_init__(self):
        if not self.barrier_waist > 0:
            raise ValueError(f"barrier_waist must be > 0, got {self.barrier_waist}")
        if self.barrier_height < 0:
            raise ValueError(f"barrier_height must be >= 0, got {self.barrier_height}")
        if self.U_prime < 0:
            raise ValueError(f"U_prime must be >= 0, got {self.U_prime}")

    def shifted(self, dz: float) -> "PotentialConfig":
        """Same landscape translated by ``dz`` along z (energies shift by U' dz)."""
        return PotentialConfig(self.U_prime, self.barrier_height,
                               self.barrier_center + dz, self.barrier_waist,
                               self.trap_offset + dz)


@dataclass(frozen=True)
class WellGeometry:
    z_min: float
    z_top: float
    U0: float
    z_m: float
    v_m: float
    exists: bool

    @classmethod
    def absent(cls) -> "WellGeometry":
        nan = float("nan")
        return cls(nan, nan, 0.0, 0.0, 0.0, False)


def potential_energy(z, cfg: PotentialConfig):
    x = np.asarray(z, dtype=float) - cfg.barrier_center
    w = cfg.barrier_waist
    out = cfg.U_prime * np.asarray(z, dtype=float) + cfg.barrier_height * np.exp(-2.0 * x * x / (w * w))
    return out if out.ndim else float(out)


def force(z, cfg: PotentialConfig):
    x = np.asarray(z, dtype=float) - cfg.barrier_center
    w = cfg.barrier_waist
    out = -cfg.U_prime + 4.0 * cfg.barrier_height * x / (w * w) * np.exp(-2.0 * x * x / (w * w))
    return out if out.ndim else float(out)


def _root(f, a: float, b: float) -> float:
    return brentq(f, a, b, xtol=_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def find_well_geometry(cfg: PotentialConfig,
                       constants: PhysicalConstants = RB85) -> WellGeometry:
    """Locate barrier top and well minimum by scanning the force for sign
    changes and refining each bracket.

    Non-existence (slope steeper than the barrier flank anywhere) is
    reported with ``exists=False``, never raised.
    """
    if cfg.barrier_height == 0:
        return WellGeometry.absent()
    w = cfg.barrier_waist
    n = int(2 * SCAN_HALF_WIDTH * SCAN_STEPS_PER_WAIST)
    x = np.linspace(-SCAN_HALF_WIDTH * w, SCAN_HALF_WIDTH * w, n + 1)
    z = cfg.barrier_center + x
    F = force(z, cfg)

    def f(zz):
        return force(zz, cfg)

    # barrier top: force goes from - (left) to + (right)
    up = np.nonzero((F[:-1] < 0) & (F[1:] >= 0))[0]
    if up.size == 0:
        return WellGeometry.absent()
    i = up[0]
    z_top = z[i + 1] if F[i + 1] == 0 else _root(f, z[i], z[i + 1])

    if cfg.U_prime == 0:
        U0 = potential_energy(z_top, cfg)
        return WellGeometry(math.inf, z_top, U0, math.inf, math.sqrt(2 * U0 / constants.mass), True)

    down = np.nonzero((F[:-1] > 0) & (F[1:] <= 0) & (z[:-1] > z_top))[0]
    if down.size:
        j = down[0]
        z_min = z[j + 1] if F[j + 1] == 0 else _root(f, z[j], z[j + 1])
    else:
        # tiny slope: the minimum lies beyond the scan window
        lo = z[-1]
        step = w
        hi = lo + step
        while f(hi) > 0:
            lo, step = hi, step * 2
            hi = lo + step
        z_min = _root(f, lo, hi)

    U0 = potential_energy(z_top, cfg) - potential_energy(z_min, cfg)
    if not U0 > 0:
        return WellGeometry.absent()
    return WellGeometry(z_min, z_top, U0, U0 / cfg.U_prime,
                        math.sqrt(2 * U0 / constants.mass), True)


def capture_bounds(geom: WellGeometry, cfg: PotentialConfig) -> tuple[float, float]:
    """Position interval [z_top, z_r] holding every trappable atom, with
    U(z_r) = U(z_top) on the uphill side of the minimum."""
    if not geom.exists:
        raise ValueError("no well: capture bounds are undefined")
    if cfg.U_prime == 0:
        return geom.z_top, math.inf
    E_top = potential_energy(geom.z_top, cfg)

    def g(z):
        return potential_energy(z, cfg) - E_top

    reach = max(geom.z_m, cfg.barrier_waist)
    hi = geom.z_min + reach
    while g(hi) < 0:
        reach *= 2
        hi = geom.z_min + reach
    z_r = brentq(g, geom.z_min, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return geom.z_top, z_r


def max_barrier_slope(cfg: PotentialConfig) -> float:
    """Steepest flank of the Gaussian barrier, 2 U_b / (w sqrt(e))."""
    return 2 * cfg.barrier_height / (cfg.barrier_waist * math.sqrt(math.e))


def barrier_for_depth(U0: float, U_prime: float, barrier_waist: float = 6e-6,
                      barrier_center: float = 0.0) -> float:
    """Barrier height producing a well of depth ``U0`` at the given slope."""
    if U0 <= 0:
        raise ValueError("target depth must be positive")

    def depth(Ub):
        g = find_well_geometry(PotentialConfig(U_prime, Ub, barrier_center, barrier_waist))
        return (g.U0 if g.exists else 0.0) - U0

    lo = U0
    hi = U0 + 2 * U_prime * barrier_waist + 1e-300
    while depth(hi) < 0:
        hi = U0 + 2 * (hi - U0)
    if depth(lo) >= 0:
        return lo
    return brentq(depth, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=500)
