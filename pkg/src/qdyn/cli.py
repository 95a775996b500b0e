"""Command line: ``qdyn demo <name> --out DIR [--seed N] [--ntraj N]`` and ``qdyn selftest``.

Exit status: 0 on success, 1 on a solver or I/O failure, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import sys

from .demos import DEFAULT_SEED, DEMOS, run_demo
from .errors import QdynError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="qdyn", description="Quantum dynamics demos and self checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    demo = sub.add_parser("demo", help="run a worked example and write its data files")
    demo.add_argument("name", choices=list(DEMOS))
    demo.add_argument("--out", required=True, metavar="DIR", help="output directory")
    demo.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                      help=f"random seed (default {DEFAULT_SEED})")
    demo.add_argument("--ntraj", type=_positive_int, default=None,
                      help="also run Monte-Carlo trajectories where the demo supports it")
    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if ns.command == "selftest":
        from .selftest import run

        return EXIT_OK if run() else EXIT_FAILURE
    try:
        files = run_demo(ns.name, ns.out, seed=ns.seed, ntraj=ns.ntraj)
    except (QdynError, OSError, ArithmeticError) as exc:
        print(f"qdyn: demo {ns.name} failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
