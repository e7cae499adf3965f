"""Thermal-cloud sampling, analytic trapped/escaped classification and
velocity-Verlet trajectories for independent atoms."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .physics import RB85, PhysicalConstants
from .potential import (PotentialConfig, WellGeometry, capture_bounds,
                        potential_energy)
from .theory import CloudSpec, small_oscillation_period

UNCLASSIFIED, TRAPPED, ESCAPED = 0, 1, 2
TAG_NAMES = {UNCLASSIFIED: "unclassified", TRAPPED: "trapped", ESCAPED: "escaped"}

# beyond this many waists the barrier force is below e^-128 of its peak
FAR_WAISTS = 8.0


@dataclass(frozen=True, eq=False)
class AtomEnsemble:
    positions: np.ndarray
    velocities: np.ndarray
    tags: np.ndarray
    seed: int
    time: float = 0.0

    def __post_init__(self):
        if not (len(self.positions) == len(self.velocities) == len(self.tags)):
            raise ValueError("positions, velocities and tags must have equal length")

    def __len__(self):
        return len(self.positions)

    @property
    def trapped(self) -> np.ndarray:
        return self.tags == TRAPPED

    def subset(self, mask) -> "AtomEnsemble":
        return replace(self, positions=self.positions[mask],
                       velocities=self.velocities[mask], tags=self.tags[mask])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,z_m,v_mps,tag\n")
            for i, (z, v, t) in enumerate(zip(self.positions, self.velocities, self.tags)):
                fh.write(f"{i},{float(z)!r},{float(v)!r},{TAG_NAMES[int(t)]}\n")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-6
    t_total: float = 20e-3
    record_stride: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_total < 0:
            raise ValueError("t_total must be >= 0")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_total / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a recorded subset plus per-atom time averages for all atoms."""
    times: np.ndarray
    indices: np.ndarray
    positions: np.ndarray  # (len(indices), len(times))
    velocities: np.ndarray
    mean_v2: np.ndarray = field(repr=False)  # time average of v^2, every atom


# -- sampling ---------------------------------------------------------------

def _uniform_open(words: np.ndarray) -> np.ndarray:
    # 53 high bits, centred in their cell: strictly inside (0, 1)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _sample_block(seed: int, start: int, stop: int) -> np.ndarray:
    """Philox block ``i`` (key=seed, counter=i) belongs to atom ``i``; word 0
    drives the position, word 1 the velocity, words 2-3 are unused."""
    bg = Philox(key=seed, counter=[start, 0, 0, 0])
    words = bg.random_raw(4 * (stop - start)).reshape(-1, 4)
    return ndtri(_uniform_open(words[:, :2]))


def _chunks(n: int, workers: int):
    edges = np.linspace(0, n, max(1, workers) + 1).astype(int)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def sample_cloud(cloud: CloudSpec, seed: int, constants: PhysicalConstants = RB85,
                 workers: int = 1) -> AtomEnsemble:
    """Draw a thermal cloud: positions ~ N(center, r), velocities ~ N(0, sigma).

    Each atom's draws depend only on (seed, atom index), so the result is
    identical for any ``workers``.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    n = cloud.count
    chunks = _chunks(n, workers)
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda c: _sample_block(seed, *c), chunks))
        normals = np.concatenate(parts)
    else:
        normals = _sample_block(seed, 0, n)
    sigma = constants.thermal_speed(cloud.temperature)
    return AtomEnsemble(positions=cloud.center + cloud.rms_radius * normals[:, 0],
                        velocities=sigma * normals[:, 1],
                        tags=np.zeros(n, dtype=np.int8), seed=seed, time=0.0)


# -- classification -----------------------------------------------------------

def energy(z, v, cfg: PotentialConfig, constants: PhysicalConstants = RB85):
    return 0.5 * constants.mass * np.asarray(v) ** 2 + potential_energy(z, cfg)


def classify(ens: AtomEnsemble, cfg: PotentialConfig, geom: WellGeometry,
             constants: PhysicalConstants = RB85) -> AtomEnsemble:
    """Tag each atom trapped iff it starts uphill of the barrier top with
    total energy strictly below the barrier-top energy."""
    if ens.time != 0:
        raise ValueError("classify needs the ensemble at switch-on (time 0)")
    if not geom.exists:
        raise ValueError("no well: every atom escapes; nothing to classify against")
    E_top = potential_energy(geom.z_top, cfg)
    E = energy(ens.positions, ens.velocities, cfg, constants)
    trapped = (ens.positions > geom.z_top) & (E < E_top)
    tags = np.where(trapped, TRAPPED, ESCAPED).astype(np.int8)
    return replace(ens, tags=tags)


# -- integration --------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _accel(z, Up, Ub, zb, w2, m):
    x = z - zb
    return (-Up + 4.0 * Ub * x / w2 * math.exp(-2.0 * x * x / w2)) / m


@numba.njit(cache=True, nogil=True)
def _time_to_zone(zi, vi, g, lo, hi):
    """Time for the free-fall parabola z + v t - g t^2/2 to first reach the
    near-barrier zone [lo, hi]; inf if it never does."""
    if zi > hi:
        c = zi - hi
        if g > 0.0:
            return (vi + math.sqrt(vi * vi + 2.0 * g * c)) / g
        return c / -vi if vi < 0.0 else math.inf
    d = lo - zi
    if g > 0.0:
        disc = vi * vi - 2.0 * g * d
        if vi <= 0.0 or disc < 0.0:
            return math.inf
        return (vi - math.sqrt(disc)) / g
    return d / vi if vi > 0.0 else math.inf


@numba.njit(cache=True, nogil=True)
def _verlet(z, v, rec_row, Up, Ub, zb, w, m, dt, n_steps, stride,
            snap_z, snap_v, mean_v2):
    w2 = w * w
    g = Up / m
    lo = zb - FAR_WAISTS * w
    hi = zb + FAR_WAISTS * w
    t_total = n_steps * dt
    for i in range(z.shape[0]):
        zi = z[i]
        vi = v[i]
        row = rec_row[i]
        if row >= 0:
            snap_z[row, 0] = zi
            snap_v[row, 0] = vi
        ai = _accel(zi, Up, Ub, zb, w2, m)
        v2_int = 0.0
        step = 0
        while step < n_steps:
            if zi < lo or zi > hi:
                # outside the zone the force is the constant -U', which
                # velocity Verlet integrates exactly: advance in closed form
                # by whole steps up to the zone entry (or the end)
                n_jump = n_steps - step
                tau = _time_to_zone(zi, vi, g, lo, hi)
                if tau < n_jump * dt:
                    n_jump = int(tau / dt)
                if n_jump >= 1:
                    if row >= 0:
                        for k in range(step // stride + 1, (step + n_jump) // stride + 1):
                            t = (k * stride - step) * dt
                            snap_z[row, k] = zi + vi * t - 0.5 * g * t * t
                            snap_v[row, k] = vi - g * t
                    t = n_jump * dt
                    v2_int += vi * vi * t - vi * g * t * t + g * g * t * t * t / 3.0
                    zi = zi + vi * t - 0.5 * g * t * t
                    vi = vi - g * t
                    ai = _accel(zi, Up, Ub, zb, w2, m)
                    step += n_jump
                    continue
            v_old = vi
            zi = zi + vi * dt + 0.5 * ai * dt * dt
            a_new = _accel(zi, Up, Ub, zb, w2, m)
            vi = vi + 0.5 * (ai + a_new) * dt
            ai = a_new
            v2_int += 0.5 * (v_old * v_old + vi * vi) * dt
            step += 1
            if row >= 0 and step % stride == 0:
                snap_z[row, step // stride] = zi
                snap_v[row, step // stride] = vi
        z[i] = zi
        v[i] = vi
        if t_total > 0.0:
            mean_v2[i] = v2_int / t_total
        else:
            mean_v2[i] = vi * vi


def integrate(ens: AtomEnsemble, cfg: PotentialConfig, icfg: IntegratorConfig,
              record=None, constants: PhysicalConstants = RB85,
              workers: int = 1) -> tuple[AtomEnsemble, Trajectory]:
    """Advance every atom by ``icfg.t_total`` under the selection potential.

    ``record`` selects atoms (index array or boolean mask) whose positions and
    velocities are stored every ``record_stride`` steps. Atoms are independent,
    so any ``workers`` partition gives bitwise-identical output.
    """
    geom = None
    if cfg.U_prime > 0 and cfg.barrier_height > 0:
        from .potential import find_well_geometry
        geom = find_well_geometry(cfg, constants)
    if geom is not None and geom.exists:
        t_osc = small_oscillation_period(cfg, geom, constants)
        if icfg.dt > t_osc / 100:
            warnings.warn(f"dt={icfg.dt:g} s under-resolves the well "
                          f"(small-oscillation period {t_osc:g} s)", RuntimeWarning)

    n = len(ens)
    n_steps = icfg.n_steps
    stride = icfg.record_stride
    if record is None:
        indices = np.zeros(0, dtype=np.int64)
    else:
        record = np.asarray(record)
        indices = np.nonzero(record)[0] if record.dtype == bool else record.astype(np.int64)
    rec_row = np.full(n, -1, dtype=np.int64)
    rec_row[indices] = np.arange(len(indices))
    n_snap = n_steps // stride + 1
    snap_z = np.zeros((len(indices), n_snap))
    snap_v = np.zeros((len(indices), n_snap))

    z = np.array(ens.positions, dtype=float)
    v = np.array(ens.velocities, dtype=float)
    mean_v2 = np.zeros(n)
    args = (cfg.U_prime, cfg.barrier_height, cfg.barrier_center, cfg.barrier_waist,
            constants.mass, icfg.dt, n_steps, stride)

    def run(chunk):
        a, b = chunk
        zc, vc, mc = z[a:b], v[a:b], mean_v2[a:b]
        _verlet(zc, vc, rec_row[a:b], *args, snap_z, snap_v, mc)

    chunks = _chunks(n, workers)
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            list(pool.map(run, chunks))
    elif chunks:
        run(chunks[0])

    out = replace(ens, positions=z, velocities=v, time=ens.time + n_steps * icfg.dt)
    times = ens.time + np.arange(n_snap) * stride * icfg.dt
    return out, Trajectory(times, indices, snap_z, snap_v, mean_v2)


def free_expansion(ens: AtomEnsemble, t: float) -> AtomEnsemble:
    if t < 0:
        raise ValueError("expansion time must be >= 0")
    return replace(ens, positions=ens.positions + ens.velocities * t, time=ens.time + t)


def oscillation_count(positions: np.ndarray, z_min: float, subset=None,
                      deadband: float = 1e-9) -> float:
    """Mean number of oscillations about ``z_min`` in a (atoms, snapshots)
    array: half the number of crossings, a crossing counted only when the
    atom moves from below ``z_min - deadband`` to above ``z_min + deadband``
    or back."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if subset is not None:
        pos = pos[np.asarray(subset)]
    if pos.shape[0] == 0:
        raise ValueError("no trapped atoms to count oscillations for")
    d = pos - z_min
    counts = np.zeros(pos.shape[0])
    side = np.zeros(pos.shape[0])  # -1 below, +1 above, 0 undecided
    for k in range(d.shape[1]):
        now = np.where(d[:, k] > deadband, 1.0, np.where(d[:, k] < -deadband, -1.0, 0.0))
        flipped = (now != 0) & (side != 0) & (now != side)
        counts += flipped
        side = np.where(now != 0, now, side)
    return float(np.mean(counts / 2.0))


def capture_mask(positions, cfg: PotentialConfig, geom: WellGeometry) -> np.ndarray:
    lo, hi = capture_bounds(geom, cfg)
    positions = np.asarray(positions)
    return (positions >= lo) & (positions <= hi)
