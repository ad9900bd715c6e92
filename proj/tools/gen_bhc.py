#!/usr/bin/env python3
"""Generate the synthetic three-bank quarterly series in data/bhc.

The series are random walks with drift, shaped like large bank holding
company loan books (billions of USD, quarter ends 1986Q2 to 2010Q4). They
are not real data.
"""

import argparse
import calendar
import pathlib
import random

QUARTER_END_MONTHS = (3, 6, 9, 12)


def quarter_ends(first=(1986, 2), last=(2010, 4)):
    year, quarter = first
    while (year, quarter) <= last:
        month = QUARTER_END_MONTHS[quarter - 1]
        day = calendar.monthrange(year, month)[1]
        yield f"{year:04d}-{month:02d}-{day:02d}"
        quarter += 1
        if quarter == 5:
            year, quarter = year + 1, 1


def series(rng, start, drift, vol, dates):
    level = start
    for _ in dates:
        level = max(1.0, level * (1.0 + drift + rng.gauss(0.0, vol)))
        yield min(level, 999.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data" / "bhc",
                        type=pathlib.Path)
    parser.add_argument("--seed", type=int, default=20101231)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    dates = list(quarter_ends())
    banks = [(40.0, 0.021, 0.02), (55.0, 0.017, 0.025), (25.0, 0.027, 0.03)]
    args.out.mkdir(parents=True, exist_ok=True)
    for i, (start, drift, vol) in enumerate(banks, start=1):
        path = args.out / f"bank{i}.csv"
        with path.open("w", newline="\n") as f:
            f.write("date,value\n")
            for date, value in zip(dates, series(rng, start, drift, vol, dates)):
                f.write(f"{date},{value:.3f}\n")
    print(f"wrote {len(banks)} files with {len(dates)} quarters to {args.out}")


if __name__ == "__main__":
    main()
