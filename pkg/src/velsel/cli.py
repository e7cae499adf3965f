"""Command-line front end.

    velsel theory   --T 26uK --U0 2uK [--gradient 8G/cm --r 400um] [--csv out.csv]
    velsel simulate scenario.json [--seed N] [--atoms N] [--out DIR] [--workers N]
    velsel sweep    scenario.json --figure 3|4 [--seed N] [--atoms N] [--out DIR] [--workers N]

Exit codes: 0 success, 2 usage or configuration error, 3 physically
infeasible scenario (no well). The default output directory is taken from
the ``VELSEL_OUT`` environment variable, falling back to ``./velsel_out``.
Every output directory receives a ``manifest.json``; passing that manifest
back as the scenario file reproduces the outputs byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config, experiments, svgplot, theory
from . import observables as obs
from .physics import RB85, UnitError, gradient_energy_per_length, to_si
from .potential import PotentialConfig, barrier_for_depth, find_well_geometry

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3
OUT_ENV = "VELSEL_OUT"


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dump(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(arg) -> Path:
    out = Path(arg if arg is not None else os.environ.get(OUT_ENV, "velsel_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: dict, config_path, scenario_doc: dict,
                   outputs: list, seed: int) -> Path:
    manifest = {
        "tool": "velsel",
        "version": __version__,
        "command": command,
        "config_path": str(config_path),
        "resolved_scenario": scenario_doc,
        "outputs": sorted(outputs),
        "seed": seed,
        "constants_fingerprint": RB85.fingerprint(),
    }
    path = out / "manifest.json"
    _dump(path, manifest)
    return path


# -- theory -------------------------------------------------------------------

def cmd_theory(args) -> dict:
    k = RB85.k_B
    T = to_si(args.T, "temperature")
    if not T > 0:
        raise UnitError("--T must be positive")
    res = {"T_uK": T * 1e6}
    if args.U0 is not None:
        U0 = _depth(args.U0)
    else:
        Ts = to_si(args.Ts, "temperature")
        if Ts < 0:
            raise UnitError("--Ts must be non-negative")
        U0 = 1.5 * k * Ts  # low-gradient relation T_s = 2 U0 / 3 k_B
    if U0 < 0:
        raise UnitError("--U0 must be non-negative")
    res["U0_uK"] = U0 / k * 1e6
    if U0 == 0:
        res.update(eta_lowgrad=0.0, eta_sqrt=0.0, Ts_low_uK=0.0, Ts_high_uK=0.0)
    else:
        Ts_low = theory.pseudo_temperature_lowgrad(U0)
        res.update(eta_lowgrad=theory.efficiency_lowgrad(U0, T),
                   eta_sqrt=theory.efficiency_from_Ts(Ts_low, T),
                   Ts_low_uK=Ts_low * 1e6,
                   Ts_high_uK=theory.pseudo_temperature_highgrad(U0) * 1e6)
    if args.gradient is not None and args.r is not None:
        Up = _gradient(args.gradient)
        r = to_si(args.r, "length")
        cloud = theory.CloudSpec(T, r)
        center = to_si(args.barrier_center, "length")
        waist = to_si(args.waist, "length")
        res["beta"] = theory.beta(PotentialConfig(Up, 0.0), cloud)
        if U0 > 0:
            Ub = barrier_for_depth(U0, Up, waist, center)
            cfg = PotentialConfig(Up, Ub, center, waist)
            geom = find_well_geometry(cfg)
            pred = theory.efficiency_quadrature(cfg, geom, cloud)
            res.update(eta_quadrature=pred.efficiency, Ts_quadrature_uK=pred.T_s * 1e6,
                       Ts_timeavg_uK=pred.T_s_time_averaged * 1e6,
                       eta_highgrad=theory.efficiency_highgrad_approx(cfg, geom, cloud),
                       v_m_cm_s=geom.v_m * 100, z_m_um=geom.z_m * 1e6,
                       barrier_uK=Ub / k * 1e6)
        else:
            res.update(eta_quadrature=0.0, Ts_quadrature_uK=0.0)
    for key, val in res.items():
        print(f"{key:18s} {val:.6g}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("quantity,value\n")
            for key, val in res.items():
                fh.write(f"{key},{float(val)!r}\n")
    return res


def _depth(text: str) -> float:
    """Well depth from a lab-unit string; a bare zero needs no unit."""
    try:
        if float(text) == 0:
            return 0.0
    except ValueError:
        pass
    return to_si(text, "energy")


def _gradient(text: str) -> float:
    try:
        return to_si(text, "energy_gradient")
    except UnitError:
        return gradient_energy_per_length(to_si(text, "gradient"))


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> Path:
    doc = config.load(args.config)
    s = config.resolve(doc, seed=args.seed, atoms=args.atoms)
    out = _out_dir(args.out)
    res = experiments.run_selection(s, workers=args.workers, keep=True)
    geom = res.geometry
    pred = theory.efficiency_quadrature(s.potential, geom, s.cloud)
    k = RB85.k_B
    T = s.cloud.temperature
    summary = {
        "efficiency_measured": res.efficiency_measured,
        "efficiency_classified": res.efficiency_classified,
        "efficiency_theory": pred.efficiency,
        "T_uK": T * 1e6,
        "T_fit_uK": res.T_fit * 1e6,
        "T_s_uK": res.T_s_mean_KE * 1e6,
        "T_s_instantaneous_uK": res.T_s_instantaneous * 1e6,
        "T_s_time_averaged_uK": res.T_s_time_averaged * 1e6,
        "T_s_theory_uK": pred.T_s * 1e6,
        "T_s_theory_time_averaged_uK": pred.T_s_time_averaged * 1e6,
        "cooling_ratio": res.T_s_mean_KE / T,
        "v_cutoff_fraction": res.v_cutoff_fraction,
        "shape_score": res.shape_score,
        "beta": res.diagnostics["beta"],
        "n_atoms": res.diagnostics["n_atoms"],
        "n_trapped": res.diagnostics["n_trapped"],
        "oscillations": res.diagnostics.get("oscillations", float("nan")),
        "geometry": {"U0_uK": geom.U0 / k * 1e6, "v_m_cm_s": geom.v_m * 100,
                     "z_m_um": geom.z_m * 1e6, "z_min_um": geom.z_min * 1e6,
                     "z_top_um": geom.z_top * 1e6},
    }
    outputs = ["summary.json"]
    _dump(out / "summary.json", summary)

    e0 = res.diagnostics["ensemble_initial"]
    held = res.diagnostics["ensemble_release"]
    m = e0.trapped
    if m.sum() >= 2:
        z, v = held.positions[m], held.velocities[m]
        tofs = sorted(t for t in set(s.tof_times) if t > 0)
        for t in tofs:
            name = f"profile_tof_{t * 1e3:g}ms.csv"
            obs.density_profile(z + v * t, time=t).to_csv(out / name)
            outputs.append(name)
        if tofs:
            t = tofs[-1]
            edges = obs.default_edges(z + v * t)
            est = obs.deconvolve_velocity(obs.density_profile(z + v * t, edges),
                                          obs.density_profile(z, edges), t)
            est.to_csv(out / "velocity_distribution.csv")
            with open(out / "deconvolution_spectra.csv", "w") as fh:
                fh.write("frequency_index,raw_abs,regularized_abs\n")
                for i, (a, b) in enumerate(zip(est.raw_spectrum, est.regularized_spectrum)):
                    fh.write(f"{i},{float(abs(a))!r},{float(abs(b))!r}\n")
            outputs += ["velocity_distribution.csv", "deconvolution_spectra.csv"]
    name = doc.get("name", Path(args.config).stem)
    write_manifest(out, {"subcommand": "simulate", "workers": args.workers}, args.config,
                   config.scenario_to_config(s, name), outputs, s.seed)
    print(f"eta_measured={res.efficiency_measured:.6g} eta_classified={res.efficiency_classified:.6g} "
          f"eta_theory={pred.efficiency:.6g} T_s={res.T_s_mean_KE * 1e6:.4g}uK "
          f"cooling_ratio={res.T_s_mean_KE / T:.4g} -> {out}")
    return out


# -- sweep --------------------------------------------------------------------

def sweep_plot(table: experiments.SweepTable, path) -> None:
    x = table.column("U0_uK")
    if table.figure == 3:
        series = [
            svgplot.Series(x, table.column("Ts_theory_timeavg_uK"), "theory (time-averaged)"),
            svgplot.Series(x, table.column("Ts_theory_quad_uK"), "theory (phase-space)"),
            svgplot.Series(x, table.column("Ts_mc_uK"), "Monte Carlo", table.column("Ts_mc_err_uK"),
                           style="points"),
        ]
        svgplot.line_plot(path, series, "well depth U0/kB (uK)", "pseudo-temperature Ts (uK)",
                          f"selected temperature, slope {table.fit_slope:.3f}")
    else:
        series = [
            svgplot.Series(x, table.column("eta_theory"), "theory (quadrature)"),
            svgplot.Series(x, table.column("eta_mc"), "Monte Carlo", table.column("eta_mc_err"),
                           style="points"),
        ]
        svgplot.line_plot(path, series, "well depth U0/kB (uK)", "efficiency",
                          f"efficiency, log-log exponent {table.fit_exponent:.3f}",
                          logx=True, logy=True)


def cmd_sweep(args) -> Path:
    doc = config.load(args.config)
    s = config.resolve(doc, seed=args.seed, atoms=args.atoms)
    spec = config.sweep_spec(doc)
    workers = args.workers if args.workers is not None else spec.workers
    out = _out_dir(args.out)
    fn = experiments.sweep_fig3 if args.figure == 3 else experiments.sweep_fig4
    table = fn(s, np.array(spec.depths), workers=workers)
    csv_name, svg_name = f"fig{args.figure}_sweep.csv", f"fig{args.figure}_sweep.svg"
    table.to_csv(out / csv_name)
    sweep_plot(table, out / svg_name)
    name = doc.get("name", Path(args.config).stem)
    write_manifest(out, {"subcommand": "sweep", "figure": args.figure},
                   args.config, config.scenario_to_config(s, name, spec),
                   [csv_name, svg_name], s.seed)
    print(f"figure {args.figure}: slope={table.fit_slope:.4g} exponent={table.fit_exponent:.4g} -> {out}")
    return out


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="velsel", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"velsel {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("theory", help="closed-form and quadrature predictions")
    t.add_argument("--T", required=True, help="cloud temperature, e.g. 26uK")
    depth = t.add_mutually_exclusive_group(required=True)
    depth.add_argument("--U0", help="well depth as temperature or energy, e.g. 2uK")
    depth.add_argument("--Ts", help="target pseudo-temperature (low-gradient relation)")
    t.add_argument("--gradient", help="field gradient, e.g. 8G/cm (or J/m)")
    t.add_argument("--r", help="rms cloud radius, e.g. 400um")
    t.add_argument("--barrier-center", default="0um", help="barrier position (default 0um)")
    t.add_argument("--waist", default="6um", help="barrier 1/e^2 radius (default 6um)")
    t.add_argument("--csv", help="also write quantity,value rows here")

    for name, helptext in (("simulate", "one selection run"), ("sweep", "barrier sweep")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("config", help="JSON scenario file (or a run manifest)")
        c.add_argument("--seed", type=int, help="override the scenario seed")
        c.add_argument("--atoms", type=int, help="override the atom count")
        c.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./velsel_out)")
        if name == "sweep":
            c.add_argument("--figure", type=int, choices=(3, 4), required=True)
            c.add_argument("--workers", type=int, help="parallel sweep points")
        else:
            c.add_argument("--workers", type=int, default=1, help="parallel atom chunks")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    for attr in ("seed", "atoms", "workers"):
        val = getattr(args, attr, None)
        if val is not None and val < (0 if attr == "seed" else 1):
            parser.error(f"--{attr} out of range: {val}")
    handlers = {"theory": cmd_theory, "simulate": cmd_simulate, "sweep": cmd_sweep}
    try:
        handlers[args.command](args)
    except experiments.ScenarioError as exc:
        print(f"velsel: infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (config.ConfigError, UnitError, OSError) as exc:
        print(f"velsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
