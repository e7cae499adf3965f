"""Analytic and quadrature predictions for the selected fraction and the
selected pseudo-temperature."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import erf

from .physics import RB85, PhysicalConstants
from .potential import (PotentialConfig, WellGeometry, capture_bounds, force,
                        potential_energy)

QUAD_EPSREL = 1e-6


@dataclass(frozen=True)
class CloudSpec:
    temperature: float  # K
    rms_radius: float  # m
    center: float = 0.0  # m
    count: int = 100_000

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not self.rms_radius > 0:
            raise ValueError(f"rms_radius must be > 0, got {self.rms_radius}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class TheoryPrediction:
    efficiency: float
    T_s: float
    mean_KE: float
    regime_tag: str  # "low-gradient" | "high-gradient" | "general-quadrature"
    T_s_time_averaged: float = float("nan")


def beta(cfg: PotentialConfig, cloud: CloudSpec, constants: PhysicalConstants = RB85) -> float:
    """Potential-energy spread across the cloud over its thermal energy."""
    return 2 * cfg.U_prime * cloud.rms_radius / (constants.k_B * cloud.temperature)


def efficiency_lowgrad(U0: float, T: float, constants: PhysicalConstants = RB85) -> float:
    """Fraction of a thermal velocity distribution with |v| < sqrt(2 U0/m)."""
    if U0 <= 0:
        return 0.0
    return float(erf(math.sqrt(U0 / (constants.k_B * T))))


def efficiency_lowgrad_approx(U0: float, T: float, constants: PhysicalConstants = RB85) -> float:
    """Small-U0 form sqrt(4 U0 / (pi k_B T))."""
    return math.sqrt(4 * U0 / (math.pi * constants.k_B * T))


def efficiency_from_Ts(Ts: float, T: float) -> float:
    if Ts > T:
        raise ValueError(f"selected temperature {Ts} exceeds the initial {T}")
    return min(1.0, math.sqrt(6 * max(Ts, 0.0) / (math.pi * T)))


def pseudo_temperature_lowgrad(U0: float, constants: PhysicalConstants = RB85) -> float:
    """Flat velocity distribution: mean KE = U0/3, so k_B T_s = 2 U0 / 3."""
    return 2 * U0 / (3 * constants.k_B)


def pseudo_temperature_highgrad(U0: float, constants: PhysicalConstants = RB85) -> float:
    """Rough high-gradient estimate, mean KE = U0/4, so k_B T_s = U0 / 2.

    A triangular well filled uniformly in phase space gives U0/5 instead
    (k_B T_s = 2 U0 / 5); ``efficiency_quadrature`` reproduces the latter.
    """
    return U0 / (2 * constants.k_B)


def efficiency_highgrad_approx(cfg: PotentialConfig, geom: WellGeometry, cloud: CloudSpec,
                               constants: PhysicalConstants = RB85) -> float:
    """Flat-density limit of the trapped-region integral, barrier at cloud
    centre: 2 v_m U0 / (3 pi r sigma U')."""
    sigma = constants.thermal_speed(cloud.temperature)
    return 2 * geom.v_m * geom.U0 / (3 * math.pi * cloud.rms_radius * sigma * cfg.U_prime)


def min_gradient_for_separation(T: float, t_sep: float, k_factor: float = 1.0,
                                constants: PhysicalConstants = RB85) -> float:
    """Slope U' whose free-fall displacement (U'/2m) t^2 equals ``k_factor``
    times the thermal expansion sigma t."""
    if k_factor < 0:
        raise ValueError("k_factor must be >= 0")
    sigma = constants.thermal_speed(T)
    return 2 * constants.mass * sigma * k_factor / t_sep


# -- quadrature -------------------------------------------------------------

def _gauss_pdf(x, mu, s):
    return np.exp(-0.5 * ((x - mu) / s) ** 2) / (math.sqrt(2 * math.pi) * s)


def _z_breakpoints(lo, hi, cloud, geom):
    pts = [geom.z_min, cloud.center]
    pts += [cloud.center + k * cloud.rms_radius for k in (-3, -1, 1, 3)]
    return sorted(p for p in pts if lo < p < hi)


def _z_limits(cfg, geom, cloud):
    z_lo, z_hi = capture_bounds(geom, cfg)
    # the position density is negligible beyond 12 rms radii
    z_lo = max(z_lo, cloud.center - 12 * cloud.rms_radius)
    z_hi = min(z_hi, cloud.center + 12 * cloud.rms_radius)
    return z_lo, z_hi


def _quad_pieces(fun, lo, hi, points, epsrel):
    edges = [lo, *points, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(fun, a, b, epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
    return total


def efficiency_quadrature(cfg: PotentialConfig, geom: WellGeometry, cloud: CloudSpec,
                          constants: PhysicalConstants = RB85,
                          time_averaged: bool = True,
                          epsrel: float = QUAD_EPSREL * 1e-3) -> TheoryPrediction:
    """Integrate the initial phase-space density over the trapped region
    {z in capture interval, m v^2/2 + U(z) < U(z_top)}.

    The velocity integral is done in closed form (erf and its second moment);
    the position integral is adaptive. With ``time_averaged`` the mean KE of
    each trapped orbit is also averaged over its period.
    """
    if not geom.exists:
        raise ValueError("no well: nothing to integrate")
    m = constants.mass
    sigma = constants.thermal_speed(cloud.temperature)
    E_top = potential_energy(geom.z_top, cfg)
    z_lo, z_hi = _z_limits(cfg, geom, cloud)
    if not z_hi > z_lo:
        return TheoryPrediction(0.0, 0.0, 0.0, "general-quadrature", 0.0)
    points = _z_breakpoints(z_lo, z_hi, cloud, geom)

    def vmax(z):
        return math.sqrt(max(2 * (E_top - potential_energy(z, cfg)) / m, 0.0))

    def p_vel(z):
        return math.erf(vmax(z) / (math.sqrt(2) * sigma))

    def ke_vel(z):
        a = vmax(z) / sigma
        # int_{-a s}^{a s} (m v^2 / 2) N(0, s^2) dv
        return 0.5 * m * sigma**2 * (math.erf(a / math.sqrt(2))
                                     - math.sqrt(2 / math.pi) * a * math.exp(-0.5 * a * a))

    def dens(z):
        return float(_gauss_pdf(z, cloud.center, cloud.rms_radius))

    eta = _quad_pieces(lambda z: dens(z) * p_vel(z), z_lo, z_hi, points, epsrel)
    if eta <= 0:
        return TheoryPrediction(0.0, 0.0, 0.0, "general-quadrature", 0.0)
    ke = _quad_pieces(lambda z: dens(z) * ke_vel(z), z_lo, z_hi, points, epsrel) / eta
    T_s = 2 * ke / constants.k_B

    T_avg = float("nan")
    if time_averaged and cfg.U_prime > 0:
        ratio = orbit_ke_ratio(cfg, geom, constants)
        U_min = potential_energy(geom.z_min, cfg)

        def inner(z):
            a = vmax(z)
            if a == 0:
                return 0.0
            Uz = potential_energy(z, cfg)

            def g(v):
                e = (0.5 * m * v * v + Uz - U_min) / geom.U0
                return float(_gauss_pdf(v, 0.0, sigma)) * float(ratio(min(max(e, 0.0), 1.0))) * e
            val, _ = integrate.quad(g, 0.0, a, epsabs=0.0, epsrel=1e-7, limit=100)
            return 2 * val * geom.U0

        ke_t = _quad_pieces(lambda z: dens(z) * inner(z), z_lo, z_hi, points, 1e-7) / eta
        T_avg = 2 * ke_t / constants.k_B

    return TheoryPrediction(min(eta, 1.0), T_s, 0.5 * constants.k_B * T_s,
                            "general-quadrature", T_avg)


def efficiency_quadrature_2d(cfg: PotentialConfig, geom: WellGeometry, cloud: CloudSpec,
                             constants: PhysicalConstants = RB85, epsrel: float = 1e-8) -> float:
    """Same trapped fraction by a plain nested 2-D adaptive quadrature (no
    closed-form velocity integral); slow, kept as a cross-check."""
    m = constants.mass
    sigma = constants.thermal_speed(cloud.temperature)
    E_top = potential_energy(geom.z_top, cfg)
    z_lo, z_hi = _z_limits(cfg, geom, cloud)

    def vmax(z):
        return math.sqrt(max(2 * (E_top - potential_energy(z, cfg)) / m, 0.0))

    def f(v, z):
        return float(_gauss_pdf(z, cloud.center, cloud.rms_radius) * _gauss_pdf(v, 0.0, sigma))

    val, _ = integrate.dblquad(f, z_lo, z_hi, lambda z: -vmax(z), vmax,
                               epsabs=0.0, epsrel=epsrel)
    return val


# -- orbit averages -------------------------------------------------------------

def turning_points(E: float, cfg: PotentialConfig, geom: WellGeometry) -> tuple[float, float]:
    """Positions z1 < z_min < z2 where U(z) = E for a bound energy E."""
    def g(z):
        return potential_energy(z, cfg) - E
    z1 = brentq(g, geom.z_top, geom.z_min, xtol=1e-16, rtol=1e-15)
    reach = max(geom.z_m, cfg.barrier_waist)
    while g(geom.z_min + reach) < 0:
        reach *= 2
    z2 = brentq(g, geom.z_min, geom.z_min + reach, xtol=1e-16, rtol=1e-15)
    return z1, z2


def orbit_averages(E: float, cfg: PotentialConfig, geom: WellGeometry,
                   constants: PhysicalConstants = RB85) -> tuple[float, float]:
    """Return (period, time-averaged kinetic energy) of the bound orbit at
    total energy ``E``."""
    m = constants.mass
    z1, z2 = turning_points(E, cfg, geom)
    half = 0.5 * (z2 - z1)
    # endpoint limits of (E - U)/((z - z1)(z2 - z)) from the force there
    s_lo = force(z1, cfg) / (z2 - z1)
    s_hi = -force(z2, cfg) / (z2 - z1)

    def smooth(theta):
        # z = z1 + half (1 - cos theta) removes both turning-point singularities
        st = math.sin(theta)
        # E - U loses all digits to cancellation this close to a turning point
        if st < 1e-3:
            return s_lo if theta < 1.0 else s_hi
        z = z1 + half * (1 - math.cos(theta))
        val = (E - potential_energy(z, cfg)) / (half * half * st * st)
        return val if val > 0 else min(s_lo, s_hi)

    kw = dict(epsabs=0.0, epsrel=1e-9, limit=200)
    # int sqrt(E - U) dz and int dz / sqrt(E - U); right at the separatrix the
    # period diverges logarithmically and quad reports roundoff, harmlessly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        i_plus, _ = integrate.quad(lambda t: math.sqrt(smooth(t)) * (half * math.sin(t)) ** 2,
                                   0.0, math.pi, **kw)
        i_minus, _ = integrate.quad(lambda t: 1.0 / math.sqrt(smooth(t)), 0.0, math.pi, **kw)
    period = 2 * math.sqrt(m / 2) * i_minus
    ke = i_plus / i_minus
    return period, ke


@lru_cache(maxsize=64)
def _ratio_table(cfg: PotentialConfig, geom: WellGeometry, constants: PhysicalConstants):
    U_min = potential_energy(geom.z_min, cfg)
    # denser toward both ends: small-oscillation limit and separatrix
    s = np.linspace(0, 1, 97)[1:-1]
    eps = 0.5 - 0.5 * np.cos(np.pi * s)
    eps = np.concatenate([eps, 1 - np.logspace(-3, -8, 6)])
    eps = np.unique(eps)
    r = np.array([orbit_averages(U_min + e * geom.U0, cfg, geom, constants)[1] / (e * geom.U0)
                  for e in eps])
    # harmonic limit: time-averaged KE is half the oscillation energy
    eps = np.concatenate([[0.0], eps, [1.0]])
    r = np.concatenate([[0.5], r, [r[-1]]])
    return PchipInterpolator(eps, r)


def orbit_ke_ratio(cfg: PotentialConfig, geom: WellGeometry,
                   constants: PhysicalConstants = RB85):
    """Interpolant of <KE>_t / (E - U_min) versus (E - U_min)/U0."""
    return _ratio_table(cfg, geom, constants)


def small_oscillation_period(cfg: PotentialConfig, geom: WellGeometry,
                             constants: PhysicalConstants = RB85) -> float:
    x = geom.z_min - cfg.barrier_center
    w2 = cfg.barrier_waist ** 2
    curvature = 4 * cfg.barrier_height / w2 * (1 - 4 * x * x / w2) * math.exp(-2 * x * x / w2)
    # U'' = -dF/dz
    curvature = -curvature
    if curvature <= 0:
        return math.inf
    return 2 * math.pi * math.sqrt(constants.mass / curvature)
