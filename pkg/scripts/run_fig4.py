"""Capture efficiency against well depth, with log-log exponents.

    python3 scripts/run_fig4.py [--atoms 100000] [--workers 4] [--out results/fig4]

Runs the two gradient presets over their default axes and a weak-slope case
(beta = 0.005) where the square-root law holds.
"""
import argparse
from pathlib import Path

import numpy as np

from velsel import experiments as exp
from velsel import theory
from velsel.cli import sweep_plot
from velsel.physics import RB85

UK = 1e-6 * RB85.k_B


def cases(atoms, seed):
    yield "beta023", exp.preset("beta023", atoms, seed), exp.default_axis("beta023")
    yield "beta17", exp.preset("beta17", atoms, seed), exp.default_axis("beta17")
    yield "beta0005", exp.with_beta(exp.preset("beta023", atoms, seed), 0.005), \
        np.geomspace(0.5, 5.0, 6) * UK


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--atoms", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("results/fig4"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, base, axis in cases(args.atoms, args.seed):
        table = exp.sweep_fig4(base, axis, workers=args.workers)
        table.to_csv(args.out / f"fig4_{name}.csv")
        sweep_plot(table, args.out / f"fig4_{name}.svg")
        th = exp.fit_exponent(table.column("U0_uK"), table.column("eta_theory"))
        beta = theory.beta(base.potential, base.cloud)
        print(f"{name}: beta={beta:.3f} exponent mc={table.fit_exponent:.3f} theory={th:.3f}")


if __name__ == "__main__":
    main()
