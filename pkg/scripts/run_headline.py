"""Tune the steep-slope preset to a 750 nK pseudo-temperature and simulate it.

    python3 scripts/run_headline.py [--atoms 100000] [--Ts 750nK] [--workers 4]

Prints the achieved cooling ratio and the capture efficiency next to the
quadrature prediction.
"""
import argparse

from velsel import experiments as exp
from velsel import theory
from velsel.physics import RB85, to_si


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--atoms", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--Ts", default="750nK")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    s = exp.headline_scenario(to_si(args.Ts, "temperature"), args.atoms, args.seed)
    res = exp.run_selection(s, workers=args.workers)
    pred = theory.efficiency_quadrature(s.potential, res.geometry, s.cloud)
    T = s.cloud.temperature
    print(f"beta            {res.diagnostics['beta']:.3f}")
    print(f"U0              {res.geometry.U0 / RB85.k_B * 1e6:.3f} uK")
    print(f"T_s (MC)        {res.T_s_mean_KE * 1e6:.4f} uK   theory {pred.T_s_time_averaged * 1e6:.4f} uK")
    print(f"cooling ratio   1/{T / res.T_s_mean_KE:.1f}")
    print(f"efficiency      {res.efficiency_classified:.5f}   theory {pred.efficiency:.5f}")


if __name__ == "__main__":
    main()
