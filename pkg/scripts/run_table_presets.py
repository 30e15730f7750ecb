#!/usr/bin/env python3
"""Run all bundled simulation preset grids and collect the JSON reports.

At scale 1 this is the full study (1000 replications x 1000 permutations
per scenario) and takes many hours; start with --scale 0.2 for a desk-size
pass.  Reports land in results/<preset>.json plus an aligned text summary
on stdout.

Usage: python scripts/run_table_presets.py [--scale S] [--seed N] [--out DIR]
"""

import argparse
import pathlib
import sys
import time

from mcvtests.cli import main as mcvtest_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    parser.add_argument("--presets", default="table2,table3,table4,table5,table6")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for preset in args.presets.split(","):
        started = time.time()
        code = mcvtest_main(
            [
                "simulate",
                "--preset",
                preset,
                "--scale",
                str(args.scale),
                "--seed",
                str(args.seed),
                "--out",
                str(out_dir / f"{preset}.json"),
            ]
        )
        if code != 0:
            return code
        print(f"# {preset} finished in {time.time() - started:.0f}s", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
