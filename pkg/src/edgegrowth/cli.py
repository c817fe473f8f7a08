"""Command-line driver.

    python3 -m edgegrowth growth-scan --field C --n 2 --m 17 --out scan.csv

Exit codes: 0 when every threshold passes, 2 on a threshold failure, 1 on error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments
from .config import (COMMANDS, ConfigError, ExperimentConfig, load_config, parse_alpha,
                     parse_range)
from .report import EXIT_ERROR, render
from .spectral import ConvergenceError

log = logging.getLogger("edgegrowth")


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--field", choices=("R", "C", "H"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, help="grid points per axis (odd)")
    p.add_argument("--box", type=float, help="box half-width L")
    p.add_argument("--t-range", type=parse_range, metavar="a:b:step")
    p.add_argument("--b-range", type=parse_range, metavar="a:b:step")
    p.add_argument("--alpha", type=parse_alpha, metavar="FLOAT|Qhalf")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--tol", type=float, help="main threshold of the command")
    p.add_argument("--tmax", type=float, help="largest t sampled")
    p.add_argument("--trials", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgegrowth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _common_flags()
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[parent])
    return parser


_FLAG_KEYS = ("field", "n", "m", "box", "t_range", "b_range", "alpha", "samples", "seed",
              "out", "format", "tol", "tmax", "trials")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = load_config(args.config) if args.config else ExperimentConfig()
    flags = ExperimentConfig(command=args.command,
                             **{k: getattr(args, k) for k in _FLAG_KEYS})
    return base.merged(flags)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        record = experiments.run(args.command, cfg)
        resolved = cfg.merged(ExperimentConfig(command=args.command)).resolved()
        text = render(record, resolved.format)
        if resolved.out:
            with open(resolved.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (ConfigError, ConvergenceError, OSError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in record.checks:
        log.info("%s = %s (threshold %s) %s", c.metric, c.value, c.threshold,
                 "ok" if c.passed else "FAIL")
    if not record.passed:
        for c in record.failures():
            print(f"threshold failure: {c.metric} = {c.value} vs {c.threshold}",
                  file=sys.stderr)
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
