"""Class-level defect data with dated releases, and its time bucketing.

A dataset is a list of releases. Each release is one (project, version)
pair with a release date and one metric record per class/file. Releases
are laid out on a timeline of fixed-width calendar-month buckets; the
bucket grid is anchored at the first day of the month of the earliest
release and always covers the latest release. Buckets with no releases
are kept so that bucket indices stay aligned with calendar time.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date
from typing import IO, Iterable

from .errors import ConflictError, EmptyDatasetError, ParseError

_MONTH_NAMES = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}


@dataclass(frozen=True)
class DatasetSchema:
    """Column names that map a CSV file onto the record fields.

    feature_cols None means: every column that is not one of the five
    identity columns is a feature, in header order.
    """

    project_col: str = "project"
    version_col: str = "version"
    date_col: str = "release_date"
    class_col: str = "class"
    defects_col: str = "defects"
    feature_cols: tuple[str, ...] | None = None


@dataclass(frozen=True)
class MetricRecord:
    project_id: str
    version_id: str
    release_date: date
    class_id: str
    features: tuple[float, ...]
    defect_count: int

    @property
    def defective(self) -> bool:
        # a class is defective iff at least one defect was recorded
        return self.defect_count > 0


@dataclass(frozen=True)
class Release:
    """All records of one (project, version) at its release date."""

    project_id: str
    version_id: str
    release_date: date
    records: tuple[MetricRecord, ...]

    @property
    def key(self) -> tuple[str, str]:
        return (self.project_id, self.version_id)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class TimeBucket:
    """Half-open interval [start, end) of calendar time."""

    index: int
    start: date
    end: date
    releases: tuple[Release, ...]


@dataclass(frozen=True)
class TimeSeriesDataset:
    buckets: tuple[TimeBucket, ...]
    granularity_months: int

    @property
    def bucket_count(self) -> int:
        return len(self.buckets)

    def all_releases(self) -> list[Release]:
        return [r for b in self.buckets for r in b.releases]

    def bucket_index(self, when: date) -> int:
        """Bucket index containing the given date; raises if outside grid."""
        first = self.buckets[0].start
        if when < first or when >= self.buckets[-1].end:
            raise ValueError(f"date {when} outside the bucket grid")
        return _month_index(when, first) // self.granularity_months


@dataclass(frozen=True)
class BucketSummary:
    bucket_index: int
    start: date
    end: date
    releases: int
    instances: int
    defective_pct: float


def month_start(d: date) -> date:
    return date(d.year, d.month, 1)


def add_months(first_of_month: date, months: int) -> date:
    """Shift a first-of-month date by a number of calendar months."""
    m = first_of_month.month - 1 + months
    return date(first_of_month.year + m // 12, m % 12 + 1, 1)


def _month_index(d: date, anchor: date) -> int:
    return (d.year - anchor.year) * 12 + (d.month - anchor.month)


def convert_date_token(token: str) -> str:
    """Normalize a '1999-Nov-08' style date token to ISO 'YYYY-MM-DD'.

    ISO input passes through unchanged. Used by the dataset conversion
    script, not by the parser; the parser accepts ISO 8601 only.
    """
    parts = token.strip().split("-")
    if len(parts) != 3:
        raise ValueError(f"unrecognized date token: {token!r}")
    year, month, day = parts
    if month.isdigit():
        return date(int(year), int(month), int(day)).isoformat()
    try:
        month_no = _MONTH_NAMES[month.lower()[:3]]
    except KeyError:
        raise ValueError(f"unrecognized month in date token: {token!r}") from None
    return date(int(year), month_no, int(day)).isoformat()


def parse_dataset(source: str | IO[str] | Iterable[str],
                  schema: DatasetSchema | None = None) -> list[Release]:
    """Parse CSV text into releases.

    The file must have a header row naming at least the five identity
    columns of the schema. Every data row becomes one MetricRecord; rows
    sharing (project, version) form one release and must agree on the
    release date. Releases are returned sorted by (date, project,
    version); records keep their source order within a release.

    Raises ParseError (with a line number) for malformed content,
    ConflictError for contradictory release dates, and
    EmptyDatasetError when there are no data rows.
    """
    schema = schema or DatasetSchema()
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)

    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDatasetError("dataset has no content") from None
    header = [h.strip() for h in header]
    positions = {name: i for i, name in enumerate(header)}

    identity_cols = (schema.project_col, schema.version_col, schema.date_col,
                     schema.class_col, schema.defects_col)
    missing = [c for c in identity_cols if c not in positions]
    if schema.feature_cols is not None:
        missing += [c for c in schema.feature_cols if c not in positions]
    if missing:
        raise ParseError(f"missing columns: {', '.join(missing)}", line=1)

    if schema.feature_cols is not None:
        feature_cols = schema.feature_cols
    else:
        feature_cols = tuple(c for c in header if c not in identity_cols)
    if not feature_cols:
        raise ParseError("no feature columns", line=1)
    feature_pos = [positions[c] for c in feature_cols]

    groups: dict[tuple[str, str], list[MetricRecord]] = {}
    dates: dict[tuple[str, str], date] = {}
    row_count = 0
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", line=line_no)
        row_count += 1
        project = row[positions[schema.project_col]].strip()
        version = row[positions[schema.version_col]].strip()
        raw_date = row[positions[schema.date_col]].strip()
        class_id = row[positions[schema.class_col]].strip()
        raw_defects = row[positions[schema.defects_col]].strip()
        if not project or not version:
            raise ParseError("empty project or version identifier", line=line_no)
        try:
            released = date.fromisoformat(raw_date)
        except ValueError:
            raise ParseError(
                f"column {schema.date_col!r}: not an ISO date: {raw_date!r}",
                line=line_no) from None
        try:
            defect_count = int(raw_defects)
        except ValueError:
            raise ParseError(
                f"column {schema.defects_col!r}: not an integer: {raw_defects!r}",
                line=line_no) from None
        if defect_count < 0:
            raise ParseError(
                f"column {schema.defects_col!r}: negative defect count",
                line=line_no)
        features = []
        for col, pos in zip(feature_cols, feature_pos):
            raw = row[pos].strip()
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(
                    f"column {col!r}: not a number: {raw!r}", line=line_no) from None
            if value != value or value in (float("inf"), float("-inf")):
                raise ParseError(
                    f"column {col!r}: non-finite value", line=line_no)
            features.append(value)

        key = (project, version)
        if key in dates and dates[key] != released:
            raise ConflictError(
                f"release {project}/{version} has conflicting dates "
                f"{dates[key]} and {released}", line=line_no)
        dates.setdefault(key, released)
        groups.setdefault(key, []).append(MetricRecord(
            project_id=project, version_id=version, release_date=released,
            class_id=class_id, features=tuple(features),
            defect_count=defect_count))

    if row_count == 0:
        raise EmptyDatasetError("dataset has a header but no data rows")

    releases = [
        Release(project_id=k[0], version_id=k[1], release_date=dates[k],
                records=tuple(recs))
        for k, recs in groups.items()
    ]
    releases.sort(key=lambda r: (r.release_date, r.project_id, r.version_id))
    return releases


def bucketize(releases: Iterable[Release],
              granularity_months: int = 6) -> TimeSeriesDataset:
    """Lay releases out on a contiguous grid of calendar-month buckets.

    Bucket 0 starts on the first day of the month of the earliest
    release; every bucket spans exactly granularity_months months and
    bucket[i].end == bucket[i+1].start. Buckets without releases are
    materialized. Release order inside a bucket is (date, project,
    version), so the grid is independent of input order.
    """
    releases = list(releases)
    if granularity_months < 1:
        raise ValueError("granularity_months must be >= 1")
    if not releases:
        raise EmptyDatasetError("cannot bucketize zero releases")

    releases.sort(key=lambda r: (r.release_date, r.project_id, r.version_id))
    anchor = month_start(releases[0].release_date)
    last = releases[-1].release_date
    count = _month_index(last, anchor) // granularity_months + 1

    grouped: list[list[Release]] = [[] for _ in range(count)]
    for rel in releases:
        grouped[_month_index(rel.release_date, anchor) // granularity_months].append(rel)

    buckets = tuple(
        TimeBucket(index=i,
                   start=add_months(anchor, i * granularity_months),
                   end=add_months(anchor, (i + 1) * granularity_months),
                   releases=tuple(grouped[i]))
        for i in range(count)
    )
    return TimeSeriesDataset(buckets=buckets, granularity_months=granularity_months)


def dataset_summary(ts: TimeSeriesDataset) -> list[BucketSummary]:
    """Per-bucket release/instance counts and defective percentage."""
    rows = []
    for bucket in ts.buckets:
        instances = sum(len(r) for r in bucket.releases)
        defective = sum(
            1 for r in bucket.releases for rec in r.records if rec.defective)
        pct = 100.0 * defective / instances if instances else 0.0
        rows.append(BucketSummary(
            bucket_index=bucket.index, start=bucket.start, end=bucket.end,
            releases=len(bucket.releases), instances=instances,
            defective_pct=pct))
    return rows
