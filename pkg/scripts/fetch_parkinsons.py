#!/usr/bin/env python3
"""Fetch the UCI Parkinsons voice dataset into data/parkinsons.csv.

The file is a CSV with a header row; the response columns used by the
two-group MCV analyses are the first voice measures, in this exact order:

    MDVP:Fo(Hz), MDVP:Fhi(Hz), MDVP:Flo(Hz), MDVP:Jitter(%)

and the grouping column is `status` (1 = disease group, n=147;
0 = healthy, n=48).  If the upstream column order ever changes, the
conditional acceptance tests skip rather than guess.

Usage: python scripts/fetch_parkinsons.py [dest_dir]
"""

import csv
import pathlib
import sys
import urllib.request

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/parkinsons/parkinsons.data"
EXPECTED_LEADING = ["name", "MDVP:Fo(Hz)", "MDVP:Fhi(Hz)", "MDVP:Flo(Hz)", "MDVP:Jitter(%)"]


def main() -> int:
    dest_dir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    dest_dir.mkdir(parents=True, exist_ok=True)
    dest = dest_dir / "parkinsons.csv"
    print(f"downloading {URL}")
    with urllib.request.urlopen(URL, timeout=60) as response:
        text = response.read().decode("utf-8")
    header = next(csv.reader(text.splitlines()))
    if header[: len(EXPECTED_LEADING)] != EXPECTED_LEADING:
        print("upstream column order changed; refusing to write:")
        print(f"  got  {header[:5]}")
        print(f"  want {EXPECTED_LEADING}")
        return 1
    rows = text.strip().splitlines()
    if len(rows) - 1 != 195:
        print(f"expected 195 data rows, got {len(rows) - 1}; refusing to write")
        return 1
    dest.write_text(text)
    print(f"wrote {dest} ({len(rows) - 1} rows)")
    print("reproduce the two-group analysis (first two voice measures):")
    print(
        "  mcvtest test --data data/parkinsons.csv"
        " --values 'MDVP:Fo(Hz),MDVP:Fhi(Hz)' --factors status --levels '1,0'"
        " --target both --method both --permutations 1000 --seed 1"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
