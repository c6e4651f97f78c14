#!/usr/bin/env python3
"""Prepare a release-dated dataset CSV from published defect data.

The experiment input format requires ISO-8601 dates. Published release
tables often carry dates like ``1999-Nov-08`` instead, and the class
metric files usually carry no dates at all. This script covers both
gaps:

    # normalize the date column of a single CSV
    python3 scripts/convert_release_dates.py --dates dates.csv --out fixed.csv

    # attach release dates to a class-level metrics CSV by project/version
    python3 scripts/convert_release_dates.py --dates dates.csv \
        --metrics classes.csv --out releases.csv

The dates file needs project, version, and date columns (names
configurable). In merge mode every metrics row must find its
(project, version) in the dates file.
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from timeaware_cpdp.dataset import convert_date_token  # noqa: E402


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dates", required=True, type=Path,
                        help="CSV holding project, version, and date columns")
    parser.add_argument("--metrics", type=Path, default=None,
                        help="optional class-level metrics CSV to join onto")
    parser.add_argument("--out", required=True, type=Path,
                        help="output CSV path")
    parser.add_argument("--project-col", default="project")
    parser.add_argument("--version-col", default="version")
    parser.add_argument("--date-col", default="release_date")
    return parser.parse_args(argv)


def read_rows(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SystemExit(f"{path}: empty file")
        return list(reader.fieldnames), list(reader)


def main(argv=None) -> int:
    args = parse_args(argv)
    date_fields, date_rows = read_rows(args.dates)
    for col in (args.project_col, args.version_col, args.date_col):
        if col not in date_fields:
            raise SystemExit(f"{args.dates}: missing column {col!r}")

    dates: dict[tuple[str, str], str] = {}
    for i, row in enumerate(date_rows, start=2):
        key = (row[args.project_col].strip(), row[args.version_col].strip())
        try:
            iso = convert_date_token(row[args.date_col])
        except ValueError as exc:
            raise SystemExit(f"{args.dates} line {i}: {exc}")
        previous = dates.setdefault(key, iso)
        if previous != iso:
            raise SystemExit(f"{args.dates} line {i}: conflicting dates "
                             f"for {'/'.join(key)}: {previous} vs {iso}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    if args.metrics is None:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=date_fields)
            writer.writeheader()
            for row in date_rows:
                row[args.date_col] = convert_date_token(row[args.date_col])
                writer.writerow(row)
        print(f"wrote {args.out} ({len(date_rows)} rows, dates normalized)")
        return 0

    metric_fields, metric_rows = read_rows(args.metrics)
    for col in (args.project_col, args.version_col):
        if col not in metric_fields:
            raise SystemExit(f"{args.metrics}: missing column {col!r}")
    out_fields = list(metric_fields)
    if args.date_col not in out_fields:
        out_fields.insert(2, args.date_col)

    missing: set[tuple[str, str]] = set()
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=out_fields)
        writer.writeheader()
        for row in metric_rows:
            key = (row[args.project_col].strip(),
                   row[args.version_col].strip())
            if key not in dates:
                missing.add(key)
                continue
            row[args.date_col] = dates[key]
            writer.writerow(row)
    if missing:
        listing = ", ".join("/".join(k) for k in sorted(missing))
        raise SystemExit(f"{args.metrics}: no release date for: {listing}")
    print(f"wrote {args.out} ({len(metric_rows)} rows joined with dates)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
