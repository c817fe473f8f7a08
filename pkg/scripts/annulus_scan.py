"""Norms of the annulus-cut phase multiplier along t, with their max/min ratio.

    python3 scripts/annulus_scan.py --b 10 --m 17 --box 10
"""
import argparse
import sys

from edgegrowth import boundary as bd
from edgegrowth import spectral as spc
from edgegrowth.config import expand_range, parse_range


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", default="C", choices=("R", "C", "H"))
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, default=17)
    ap.add_argument("--box", type=float, default=10.0)
    ap.add_argument("--b", type=float, default=10.0)
    ap.add_argument("--t-range", type=parse_range, default=(1.0, 6.0, 1.0))
    ap.add_argument("--annulus", type=float, nargs=4, default=(1.0, 1.5, 2.5, 3.0))
    args = ap.parse_args()

    ctx = bd.CocycleContext.of(args.field, args.n)
    grid = spc.Grid(args.field, args.n, args.box, args.m)
    psi = bd.AnnulusCutoff.at_origin(ctx, *args.annulus)
    res = spc.annulus_boundedness(ctx, grid, psi, expand_range(args.t_range), args.b)
    for r in res.rows:
        print(f"t={r.t:<5g} norm={r.norm:.6f} iters={r.iters}")
    print(f"max/min = {res.ratio:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
