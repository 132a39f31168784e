"""Write plot-ready CSV for every figure recipe.

    python3 scripts/reproduce_figures.py [--out DIR] [--workers N] [--quick]

``--quick`` shrinks the shape search and Monte-Carlo trial counts so the whole
run finishes in well under a minute.
"""
import argparse
import json
import sys
import tempfile

from treecluster import cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="out/figures")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--quick", action="store_true")
    args = p.parse_args(argv)
    overrides = {"trials": 20000, "max_depth": 4, "max_branch": 10} if args.quick else {}
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(overrides, fh)
    code = 0
    for name in cli.figure_recipes():
        code |= cli.main(["recipe", name, "--out", args.out, "--workers", str(args.workers),
                          "--config", fh.name])
    return code


if __name__ == "__main__":
    sys.exit(main())
