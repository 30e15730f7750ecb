#!/usr/bin/env python3
"""Fetch the Beat-the-Blues clinical trial data into data/btheb.csv.

Source: the BtheB data frame from the R package HSAUR, via the Rdatasets
mirror.  Columns used downstream: `drug` (No/Yes), `length` (<6m/>6m) and
`bdi.pre`.  Cell sizes must come out as 24/32/25/19 for
(Yes,<6m)/(Yes,>6m)/(No,<6m)/(No,>6m).

Usage: python scripts/fetch_btheb.py [dest_dir]
"""

import csv
import pathlib
import sys
import urllib.request

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/HSAUR/BtheB.csv"
EXPECTED_CELLS = {("Yes", "<6m"): 24, ("Yes", ">6m"): 32, ("No", "<6m"): 25, ("No", ">6m"): 19}


def main() -> int:
    dest_dir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    dest_dir.mkdir(parents=True, exist_ok=True)
    dest = dest_dir / "btheb.csv"
    print(f"downloading {URL}")
    with urllib.request.urlopen(URL, timeout=60) as response:
        text = response.read().decode("utf-8")
    rows = list(csv.DictReader(text.splitlines()))
    missing = {"drug", "length", "bdi.pre"} - set(rows[0].keys() if rows else ())
    if missing:
        print(f"upstream columns missing {sorted(missing)}; refusing to write")
        return 1
    counts: dict[tuple[str, str], int] = {}
    for row in rows:
        key = (row["drug"], row["length"])
        counts[key] = counts.get(key, 0) + 1
    if counts != EXPECTED_CELLS:
        print(f"unexpected cell sizes {counts}; refusing to write")
        return 1
    dest.write_text(text)
    print(f"wrote {dest} ({len(rows)} rows)")
    print("reproduce the two-way analysis:")
    for effect in ("A", "B", "AB"):
        print(
            f"  mcvtest test --data data/btheb.csv --values bdi.pre"
            f" --factors drug,length --levels 'Yes,No;<6m,>6m' --effect {effect}"
            f" --target both --method both --permutations 1000 --seed 1"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
