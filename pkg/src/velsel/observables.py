"""Measured quantities from simulated ensembles: density profiles, TOF
thermometry, pseudo-temperatures, protocol efficiency, velocity
deconvolution and cutoff sharpness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physics import RB85, PhysicalConstants
from .potential import PotentialConfig, WellGeometry, capture_bounds

DEFAULT_BINS = 200
DEFAULT_SPAN = 6.0  # half-width of the default histogram range, in cloud widths


@dataclass(frozen=True, eq=False)
class DensityProfile:
    bin_edges: np.ndarray
    counts: np.ndarray
    normalization: float
    underflow: int = 0
    overflow: int = 0
    time: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def width(self) -> float:
        """rms width of the histogrammed distribution."""
        c, w = self.centers, self.counts
        mean = np.sum(c * w) / np.sum(w)
        return float(np.sqrt(np.sum(w * (c - mean) ** 2) / np.sum(w)))

    def to_csv(self, path) -> None:
        write_csv(path, self.centers, self.counts)


@dataclass(frozen=True, eq=False)
class VelocityEstimate:
    velocities: np.ndarray  # bin centres, m/s
    density: np.ndarray  # unit area, negatives clipped
    raw_density: np.ndarray  # unit area, as deconvolved
    raw_spectrum: np.ndarray  # final / initial, unregularized (inf/nan where initial vanishes)
    regularized_spectrum: np.ndarray

    def mass_within(self, v_cut: float) -> float:
        dv = self.velocities[1] - self.velocities[0]
        inside = np.abs(self.velocities) <= v_cut
        return float(np.sum(self.density[inside]) * dv)

    def to_csv(self, path) -> None:
        write_csv(path, self.velocities, self.density)


@dataclass
class SelectionResult:
    efficiency_measured: float
    efficiency_classified: float
    T_fit: float
    T_s_mean_KE: float
    T_s_instantaneous: float
    T_s_time_averaged: float
    v_cutoff_fraction: float
    shape_score: float
    geometry: WellGeometry
    diagnostics: dict = field(default_factory=dict)


def write_csv(path, x, y, header=("bin_center", "value")) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def default_edges(positions, bins: int = DEFAULT_BINS, span: float = DEFAULT_SPAN) -> np.ndarray:
    """``bins`` uniform bins over mean +/- ``span`` rms widths."""
    positions = np.asarray(positions)
    mu = float(np.mean(positions))
    s = float(np.std(positions))
    if s == 0:
        s = 1e-6
    return np.linspace(mu - span * s, mu + span * s, bins + 1)


def density_profile(positions, bins=None, time: float = 0.0) -> DensityProfile:
    """Histogram positions. ``bins`` is an edge array or a bin count (default
    200 bins over +/- 6 rms widths); atoms outside land in under/overflow."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise ValueError("need at least one atom")
    if bins is None:
        edges = default_edges(positions)
    elif np.ndim(bins) == 0:
        if int(bins) < 1:
            raise ValueError("need at least one bin")
        edges = default_edges(positions, int(bins))
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.size < 2:
            raise ValueError("need at least two bin edges")
    counts, _ = np.histogram(positions, edges)
    under = int(np.sum(positions < edges[0]))
    over = int(np.sum(positions > edges[-1]))
    return DensityProfile(edges, counts.astype(float), float(counts.sum()), under, over, time)


def fit_temperature_tof(profiles, times, constants: PhysicalConstants = RB85):
    """Least-squares fit of width^2(t) = sigma_x^2 + (k_B T / m) t^2.

    ``profiles`` are DensityProfiles or raw rms widths (m). Returns
    ``(T, sigma_x, residual_rms)``; T may come out slightly negative for a
    cold cloud and is clipped at zero.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 2 or np.ptp(times ** 2) == 0:
        raise ValueError("need at least two distinct expansion times")
    widths = np.array([p.width if isinstance(p, DensityProfile) else float(p)
                       for p in profiles])
    A = np.column_stack([np.ones_like(times), times ** 2])
    coef, *_ = np.linalg.lstsq(A, widths ** 2, rcond=None)
    resid = widths ** 2 - A @ coef
    T = max(coef[1], 0.0) * constants.mass / constants.k_B
    return T, math.sqrt(max(coef[0], 0.0)), float(np.sqrt(np.mean(resid ** 2)))


def pseudo_temperature(velocities, constants: PhysicalConstants = RB85) -> float:
    """2 <KE> / k_B over the given (selected) velocities."""
    velocities = np.asarray(velocities, dtype=float)
    if velocities.size == 0:
        raise ValueError("empty selection: pseudo-temperature undefined")
    return float(constants.mass * np.mean(velocities ** 2) / constants.k_B)


def pseudo_temperature_time_averaged(mean_v2, constants: PhysicalConstants = RB85) -> float:
    """Same, from per-atom time averages of v^2 over the hold."""
    mean_v2 = np.asarray(mean_v2, dtype=float)
    if mean_v2.size == 0:
        raise ValueError("empty selection: pseudo-temperature undefined")
    return float(constants.mass * np.mean(mean_v2) / constants.k_B)


def efficiency_window(geom: WellGeometry, cfg: PotentialConfig, t_sep: float):
    lo, hi = capture_bounds(geom, cfg)
    pad = geom.v_m * t_sep
    return lo - pad, hi + pad


def measure_efficiency(positions, geom: WellGeometry, cfg: PotentialConfig,
                       t_sep: float = 0.5e-3, domain=None) -> float:
    """Fraction of atoms inside the capture interval dilated by v_m * t_sep,
    evaluated ``t_sep`` after the fields are switched off."""
    positions = np.asarray(positions)
    if not geom.exists or positions.size == 0:
        return 0.0
    lo, hi = efficiency_window(geom, cfg, t_sep)
    if domain is not None and (lo < domain[0] or hi > domain[1]):
        raise ValueError(f"efficiency window [{lo:g}, {hi:g}] m exceeds the "
                         f"simulation domain [{domain[0]:g}, {domain[1]:g}] m")
    if not math.isfinite(hi):
        raise ValueError("unbounded capture interval (zero gradient): no spatial discrimination")
    inside = (positions >= lo) & (positions <= hi)
    return float(np.mean(inside))


def deconvolve_velocity(final: DensityProfile, initial: DensityProfile, t: float,
                        eps: float = 1e-3) -> VelocityEstimate:
    """Recover the velocity distribution from a final TOF profile and the
    profile at release, assuming positions and velocities independent.

    Both profiles must share bin edges. Wiener-style division with
    regularization ``eps`` relative to the peak kernel power.
    """
    if t <= 0:
        raise ValueError("expansion time must be positive")
    edges = final.bin_edges
    if initial.bin_edges.shape != edges.shape or not np.allclose(initial.bin_edges, edges):
        raise ValueError("final and initial profiles must share bin edges")
    dx = np.diff(edges)
    if not np.allclose(dx, dx[0]):
        raise ValueError("deconvolution needs uniform bins")
    dx = dx[0]
    n = len(final.counts)
    size = 2 * n  # zero padding against wrap-around
    F = np.fft.rfft(final.counts / final.counts.sum(), size)
    K = np.fft.rfft(initial.counts / initial.counts.sum(), size)
    power = np.abs(K) ** 2
    if eps == 0:
        if power.min() < 1e-24 * power.max():
            raise ValueError("kernel spectrum has (near-)zeros; raise eps above 0 "
                             "(try 1e-3) to regularize the division")
        G = F / K
    else:
        G = F * np.conj(K) / (power + eps * power.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        raw_spec = F / K
    d = np.fft.irfft(G, size)
    # displacement index k in [-n, n) relative to the initial profile
    d = np.fft.fftshift(d)
    disp = (np.arange(size) - n) * dx
    v = disp / t
    dv = dx / t
    raw = d / (np.sum(d) * dv)
    clipped = np.clip(d, 0, None)
    dens = clipped / (np.sum(clipped) * dv)
    return VelocityEstimate(v, dens, raw, raw_spec, G)


def cutoff_metrics(velocities, density, v_m: float) -> dict:
    """Tail mass beyond 1.1 v_m and a shape score: mean density on
    v_m/2 < |v| < v_m over mean density on |v| < v_m/2 (1 for a flat top,
    1/3 for a triangle)."""
    velocities = np.asarray(velocities, dtype=float)
    density = np.asarray(density, dtype=float)
    total = np.sum(density)
    if total <= 0:
        raise ValueError("distribution carries no mass")
    a = np.abs(velocities)
    tail = float(np.sum(density[a > 1.1 * v_m]) / total)
    inner = density[a < 0.5 * v_m]
    outer = density[(a >= 0.5 * v_m) & (a <= v_m)]
    score = float(np.mean(outer) / np.mean(inner)) if inner.size and outer.size and np.mean(inner) > 0 else float("nan")
    return {"tail_fraction": tail, "shape_score": score}


def cutoff_metrics_from_samples(velocities, v_m: float) -> dict:
    """Cutoff metrics of a sampled velocity set."""
    velocities = np.asarray(velocities, dtype=float)
    if velocities.size == 0:
        raise ValueError("no velocities")
    tail = float(np.mean(np.abs(velocities) > 1.1 * v_m))
    a = np.abs(velocities)
    # equal-width halves: counts per unit speed
    inner = np.sum(a < 0.5 * v_m)
    outer = np.sum((a >= 0.5 * v_m) & (a <= v_m))
    score = float(outer / inner) if inner else float("nan")
    return {"tail_fraction": tail, "shape_score": score}
