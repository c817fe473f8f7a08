"""Monte Carlo unitarity of pi_0 for random group elements and test functions.

    python3 scripts/unitarity.py --field H --samples 1000000 --trials 10
"""
import argparse
import math
import sys

from edgegrowth import experiments as ex
from edgegrowth.boundary import CocycleContext


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", default="C", choices=("R", "C", "H"))
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--tmax", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ctx = CocycleContext.of(args.field, args.n)
    res = ex.unitarity_trials(ctx, args.trials, args.samples, args.seed, args.tmax)
    print("trial  lhs                          rhs                          rel_err   stderr")
    for k, r in enumerate(res):
        print(f"{k:<6d} {r.lhs:<28.6f} {r.rhs:<28.6f} {r.rel_err:.2e}  {r.stderr:.2e}")
    threshold = 5 / math.sqrt(args.samples)
    worst = max(r.rel_err for r in res)
    print(f"max rel_err {worst:.2e} vs 5/sqrt(samples) = {threshold:.2e}")
    return 0 if worst < threshold else 2


if __name__ == "__main__":
    sys.exit(main())
