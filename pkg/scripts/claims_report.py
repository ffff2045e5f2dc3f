#!/usr/bin/env python3
"""Print the relative-behavior report for an already-written sweep CSV."""

import argparse

from fcrbt.bench import parse_csv
from fcrbt.claims import evaluate_claims, format_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Evaluate the qualitative variant claims against a sweep CSV."
    )
    parser.add_argument("csv", help="file produced by fcrbt-bench / run_sweep.py")
    args = parser.parse_args(argv)
    with open(args.csv, encoding="utf-8") as fh:
        results = parse_csv(fh)
    print(format_report(evaluate_claims(results)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
