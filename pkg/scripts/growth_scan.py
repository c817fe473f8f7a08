"""Multiplier growth scan with a printed norm table and the fitted exponents.

    python3 scripts/growth_scan.py --field C --m 17 --out results/growth.csv

Prints log-norms as a (t x b) table, beta_b (max over t of the slope of
log norm against log(1+|b|)) and slope_t (max over b of the slope in t over
the upper half of the t values).
"""
import argparse
import sys

import numpy as np

from edgegrowth import boundary as bd
from edgegrowth import spectral as spc
from edgegrowth.config import parse_alpha, parse_range, expand_range
from edgegrowth.report import ResultRecord, render


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", default="C", choices=("R", "C", "H"))
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, default=17)
    ap.add_argument("--box", type=float, default=3.0)
    ap.add_argument("--t-range", type=parse_range, default=(0.0, 3.0, 0.5))
    ap.add_argument("--b-range", type=parse_range, default=(0.0, 20.0, 2.0))
    ap.add_argument("--alpha", type=parse_alpha, default="Qhalf")
    ap.add_argument("--cutoff", type=float, nargs=2, default=(0.5, 1.0))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    ctx = bd.CocycleContext.of(args.field, args.n)
    grid = spc.Grid(args.field, args.n, args.box, args.m)
    chi = bd.SmoothCutoff.at_origin(ctx, *args.cutoff)
    ts, bs = expand_range(args.t_range), expand_range(args.b_range)
    res = spc.growth_scan(ctx, grid, chi, ts, bs, args.seed, args.alpha)

    tab = res.table()
    print("log norm   " + " ".join(f"b={b:<6g}" for b in bs))
    for t in ts:
        print(f"t={t:<7g} " + " ".join(f"{np.log(tab[(t, b)]):8.4f}" for b in bs))
    print(f"beta_b = {res.beta_b:.4f} (reference Q/2 = {ctx.Q / 2})")
    print(f"slope_t = {res.slope_t:.4f}")
    if args.out:
        rec = ResultRecord("growth-scan", vars(args) | {"t_range": list(args.t_range),
                                                        "b_range": list(args.b_range)},
                           rows=[r.as_tuple() for r in res.rows])
        with open(args.out, "w") as fh:
            fh.write(render(rec, "csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
