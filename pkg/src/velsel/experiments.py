"""End-to-end selection runs, barrier sweeps and the preset scenarios."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import ensemble as ens_mod
from . import observables as obs
from . import theory
from .physics import RB85, PhysicalConstants, convert, gradient_energy_per_length
from .potential import PotentialConfig, barrier_for_depth, find_well_geometry
from .theory import CloudSpec

OSCILLATION_SAMPLE = 2000  # trapped atoms whose trajectories are recorded


class ScenarioError(ValueError):
    """The scenario is physically infeasible (e.g. no well forms)."""


@dataclass(frozen=True)
class Scenario:
    cloud: CloudSpec
    potential: PotentialConfig
    hold_time: float = 20e-3
    separation_time: float = 0.5e-3
    tof_times: tuple = (5e-3, 10e-3, 15e-3, 20e-3)
    integrator: ens_mod.IntegratorConfig = field(default_factory=ens_mod.IntegratorConfig)
    seed: int = 0

    def __post_init__(self):
        if self.hold_time < 0 or self.separation_time < 0:
            raise ValueError("times must be non-negative")
        if any(t < 0 for t in self.tof_times):
            raise ValueError("TOF times must be non-negative")

    def with_depth(self, U0: float) -> "Scenario":
        """Same scenario with the barrier raised to give well depth ``U0`` (J)."""
        p = self.potential
        Ub = barrier_for_depth(U0, p.U_prime, p.barrier_waist, p.barrier_center)
        return replace(self, potential=replace(p, barrier_height=Ub))


# -- presets ------------------------------------------------------------------

def preset(name: str, count: int = 100_000, seed: int = 0) -> Scenario:
    """Paper-regime base scenarios (barrier height left at zero).

    ``beta023``: compressed cloud, 26 uK, r = 160 um, 3 G/cm.
    ``beta17``: large cloud, 26 uK, r = 400 um, 8 G/cm.
    """
    table = {
        "beta023": (26e-6, 160e-6, 3.0),
        "beta17": (26e-6, 400e-6, 8.0),
    }
    try:
        T, r, G = table[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(table)}") from None
    Up = gradient_energy_per_length(convert(G, "G/cm", "T/m"))
    # bias field puts the quadrupole centre well outside the cloud
    return Scenario(cloud=CloudSpec(T, r, 0.0, count),
                    potential=PotentialConfig(Up, 0.0, 0.0, 6e-6, trap_offset=-10 * r),
                    seed=seed)


DEFAULT_AXES_UK = {
    "beta023": (0.5, 30.0),
    "beta17": (2.0, 60.0),
}


def with_beta(base: Scenario, beta_target: float,
              constants: PhysicalConstants = RB85) -> Scenario:
    """Rescale the gradient of ``base`` so that 2 U' r / k_B T = ``beta_target``
    (barrier height kept; re-tune depth afterwards with ``with_depth``)."""
    if not beta_target > 0:
        raise ValueError("beta must be positive")
    c = base.cloud
    Up = beta_target * constants.k_B * c.temperature / (2 * c.rms_radius)
    return replace(base, potential=replace(base.potential, U_prime=Up))


def default_axis(name: str, points: int = 8) -> np.ndarray:
    """Log-spaced well depths (J) for the preset's Fig. 3/4 sweeps."""
    lo, hi = DEFAULT_AXES_UK[name]
    return np.geomspace(lo, hi, points) * 1e-6 * RB85.k_B


# -- single run ---------------------------------------------------------------

def run_selection(s: Scenario, constants: PhysicalConstants = RB85,
                  workers: int = 1, keep: bool = False) -> obs.SelectionResult:
    """Sample, classify, hold in the potential, release and measure.

    With ``keep`` the ensembles and trajectory are attached to the
    diagnostics (``ensemble_initial``, ``ensemble_release``, ``trajectory``).
    """
    cfg = s.potential
    geom = find_well_geometry(cfg, constants)
    if not geom.exists:
        raise ScenarioError("no well forms: the gradient overwhelms the barrier "
                            f"(U'={cfg.U_prime:g} J/m, barrier={cfg.barrier_height:g} J)")
    e0 = ens_mod.classify(ens_mod.sample_cloud(s.cloud, s.seed, constants, workers),
                          cfg, geom, constants)
    trapped = e0.trapped
    n = len(e0)
    n_trapped = int(trapped.sum())
    record = np.nonzero(trapped)[0][:OSCILLATION_SAMPLE]

    icfg = replace(s.integrator, t_total=s.hold_time)
    held, traj = ens_mod.integrate(e0, cfg, icfg, record=record,
                                   constants=constants, workers=workers)
    flown = ens_mod.free_expansion(held, s.separation_time)
    eta_measured = obs.measure_efficiency(flown.positions, geom, cfg, s.separation_time)

    diag = {"n_atoms": n, "n_trapped": n_trapped,
            "beta": theory.beta(cfg, s.cloud, constants), "U0": geom.U0}
    if keep:
        diag.update(ensemble_initial=e0, ensemble_release=held, trajectory=traj)
    if n_trapped == 0:
        return obs.SelectionResult(eta_measured, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                                   float("nan"), geom, diag)

    v_rel = held.velocities[trapped]
    z_rel = held.positions[trapped]
    T_s = obs.pseudo_temperature(v_rel, constants)
    T_inst = obs.pseudo_temperature(e0.velocities[trapped], constants)
    T_avg = obs.pseudo_temperature_time_averaged(traj.mean_v2[trapped], constants)
    ke = 0.5 * constants.mass * v_rel ** 2
    diag["T_s_stderr"] = float(2 * np.std(ke) / constants.k_B / math.sqrt(n_trapped))

    T_fit = float("nan")
    tof = [t for t in s.tof_times if t > 0]
    if len(set(tof)) >= 2 and n_trapped >= 2:
        profiles = [obs.density_profile(z_rel + v_rel * t, time=t) for t in tof]
        T_fit, sigma_x, resid = obs.fit_temperature_tof(profiles, tof, constants)
        diag["tof_sigma_x"] = sigma_x
        diag["tof_residual"] = resid

    metrics = obs.cutoff_metrics_from_samples(v_rel, geom.v_m)
    if record.size and s.hold_time > 0:
        diag["oscillations"] = ens_mod.oscillation_count(traj.positions, geom.z_min)
    return obs.SelectionResult(
        efficiency_measured=eta_measured,
        efficiency_classified=n_trapped / n,
        T_fit=T_fit,
        T_s_mean_KE=T_s,
        T_s_instantaneous=T_inst,
        T_s_time_averaged=T_avg,
        v_cutoff_fraction=metrics["tail_fraction"],
        shape_score=metrics["shape_score"],
        geometry=geom,
        diagnostics=diag,
    )


# -- sweeps -------------------------------------------------------------------

SWEEP_COLUMNS = (
    "U0_uK", "barrier_uK", "beta", "eta_theory", "eta_mc", "eta_mc_err",
    "eta_measured", "Ts_theory_low_uK", "Ts_theory_high_uK", "Ts_theory_quad_uK",
    "Ts_theory_timeavg_uK", "Ts_mc_uK", "Ts_mc_err_uK", "T_fit_uK", "n_trapped",
    "fit_slope", "fit_exponent",
)


@dataclass
class SweepTable:
    figure: int
    axis: np.ndarray  # well depths, K
    rows: list
    fit_slope: float = float("nan")
    fit_exponent: float = float("nan")

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for r in self.rows:
                vals = dict(r, fit_slope=self.fit_slope, fit_exponent=self.fit_exponent)
                fh.write(",".join(_fmt(vals[c]) for c in SWEEP_COLUMNS) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _sweep_point(base: Scenario, U0: float, constants: PhysicalConstants) -> dict:
    s = base.with_depth(U0)
    k = constants.k_B
    res = run_selection(s, constants)
    geom = res.geometry
    pred = theory.efficiency_quadrature(s.potential, geom, s.cloud, constants)
    n = res.diagnostics["n_atoms"]
    eta = res.efficiency_classified
    return {
        "U0_uK": geom.U0 / k * 1e6,
        "barrier_uK": s.potential.barrier_height / k * 1e6,
        "beta": theory.beta(s.potential, s.cloud, constants),
        "eta_theory": pred.efficiency,
        "eta_mc": eta,
        "eta_mc_err": math.sqrt(max(pred.efficiency * (1 - pred.efficiency), 0.0) / n),
        "eta_measured": res.efficiency_measured,
        "Ts_theory_low_uK": theory.pseudo_temperature_lowgrad(geom.U0, constants) * 1e6,
        "Ts_theory_high_uK": theory.pseudo_temperature_highgrad(geom.U0, constants) * 1e6,
        "Ts_theory_quad_uK": pred.T_s * 1e6,
        "Ts_theory_timeavg_uK": pred.T_s_time_averaged * 1e6,
        "Ts_mc_uK": res.T_s_mean_KE * 1e6,
        "Ts_mc_err_uK": res.diagnostics.get("T_s_stderr", 0.0) * 1e6,
        "T_fit_uK": res.T_fit * 1e6,
        "n_trapped": res.diagnostics["n_trapped"],
    }


def _run_sweep(base: Scenario, axis, figure: int, constants, workers: int) -> SweepTable:
    axis = np.asarray(axis, dtype=float)
    if axis.size < 4:
        raise ValueError("a sweep needs at least 4 axis points")
    if np.any(np.diff(axis) <= 0):
        raise ValueError("sweep axis must be strictly increasing")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda U0: _sweep_point(base, U0, constants), axis))
    else:
        rows = [_sweep_point(base, U0, constants) for U0 in axis]
    return SweepTable(figure, axis / constants.k_B, rows)


def fit_slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


def fit_exponent(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def sweep_fig3(base: Scenario, axis, constants: PhysicalConstants = RB85,
               workers: int = 1) -> SweepTable:
    """Selected pseudo-temperature versus well depth; slope of T_s against
    U0/k_B over the four shallowest points."""
    table = _run_sweep(base, axis, 3, constants, workers)
    low = slice(0, 4)
    table.fit_slope = fit_slope(table.column("U0_uK")[low], table.column("Ts_mc_uK")[low])
    table.fit_exponent = fit_exponent(table.column("U0_uK"), table.column("eta_mc"))
    return table


def sweep_fig4(base: Scenario, axis, constants: PhysicalConstants = RB85,
               workers: int = 1) -> SweepTable:
    """Efficiency versus well depth with a log-log exponent over the axis."""
    table = _run_sweep(base, axis, 4, constants, workers)
    table.fit_exponent = fit_exponent(table.column("U0_uK"), table.column("eta_mc"))
    table.fit_slope = fit_slope(table.column("U0_uK")[:4], table.column("Ts_mc_uK")[:4])
    return table


# -- headline -----------------------------------------------------------------

def depth_for_pseudo_temperature(base: Scenario, T_s: float,
                                 constants: PhysicalConstants = RB85) -> float:
    """Well depth (J) whose phase-space-averaged selected pseudo-temperature
    (time-averaged over the orbit) equals ``T_s``."""
    def mismatch(log_U0):
        s = base.with_depth(math.exp(log_U0))
        g = find_well_geometry(s.potential, constants)
        return theory.efficiency_quadrature(s.potential, g, s.cloud, constants).T_s_time_averaged - T_s

    k = constants.k_B
    lo, hi = math.log(1.0 * k * T_s), math.log(6.0 * k * T_s)
    return math.exp(brentq(mismatch, lo, hi, xtol=1e-6))


def headline_scenario(T_s: float = 750e-9, count: int = 100_000, seed: int = 0,
                      constants: PhysicalConstants = RB85) -> Scenario:
    """beta ~ 1.7 preset with the barrier tuned to reach ``T_s``."""
    base = preset("beta17", count, seed)
    return base.with_depth(depth_for_pseudo_temperature(base, T_s, constants))
