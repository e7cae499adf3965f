"""Selected pseudo-temperature against well depth for the two gradient presets.

    python3 scripts/run_fig3.py [--atoms 100000] [--workers 4] [--out results/fig3]

Writes one CSV and one SVG per preset plus a short comparison on stdout.
"""
import argparse
from pathlib import Path

import numpy as np

from velsel import experiments as exp
from velsel.cli import sweep_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--atoms", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("results/fig3"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in ("beta023", "beta17"):
        base = exp.preset(name, args.atoms, args.seed)
        table = exp.sweep_fig3(base, exp.default_axis(name), workers=args.workers)
        table.to_csv(args.out / f"fig3_{name}.csv")
        sweep_plot(table, args.out / f"fig3_{name}.svg")
        ratio = table.column("Ts_mc_uK") / table.column("U0_uK")
        print(f"{name}: beta={table.column('beta')[0]:.3f} slope={table.fit_slope:.3f} "
              f"Ts/U0 range {np.min(ratio):.3f}..{np.max(ratio):.3f}")


if __name__ == "__main__":
    main()
