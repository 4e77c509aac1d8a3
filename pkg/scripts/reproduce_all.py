"""Reproduce all seven table analogues into one directory.

    python scripts/reproduce_all.py --out-dir results [--config my.yaml]
"""
import argparse
import sys

from wavegesture.cli import main


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results")
    p.add_argument("--config")
    p.add_argument("--tables", type=int, nargs="*", default=list(range(1, 8)))
    args = p.parse_args(argv)
    extra = ["--config", args.config] if args.config else []
    status = 0
    for n in args.tables:
        status |= main(["reproduce", "--table", str(n), "--out-dir", args.out_dir, *extra])
    return status


if __name__ == "__main__":
    sys.exit(run())
