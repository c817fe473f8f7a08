"""Empirical constants of the derivative bounds for B_t and B_t^{ib}.

    python3 scripts/derivative_constants.py --field C --samples 100000

Prints, for each order, the supremum on the sample, on a doubled sample, and
(for the oscillatory ratio) the partition-counting bound built from the
preparatory constants.
"""
import argparse
import sys

from edgegrowth import experiments as ex
from edgegrowth import symbolic as sy
from edgegrowth.boundary import CocycleContext


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", default="C", choices=("R", "C", "H"))
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--tmax", type=float, default=10.0)
    ap.add_argument("--bmax", type=float, default=100.0)
    ap.add_argument("--max-words", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ctx = CocycleContext.of(args.field, args.n)
    spec = sy.SampleSpec(count=args.samples, t_range=(0.0, args.tmax),
                         b_range=(-args.bmax, args.bmax), seed=args.seed)
    v = ex.derivative_constants(ctx, spec, max_words=args.max_words)
    print("order  prep        prep(2N)    tech        tech(2N)    partition bound")
    for k in range(1, 6):
        print(f"{k:<6d} {v['prep'][k]:<11.6g} {v['prep_doubled'][k]:<11.6g} "
              f"{v['tech'][k]:<11.6g} {v['tech_doubled'][k]:<11.6g} {v['bound'][k]:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
