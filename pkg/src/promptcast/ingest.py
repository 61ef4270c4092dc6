"""Raw record loading, daily aggregation, completeness filtering and
anonymized object selection.

Everything here is a pure function over its inputs except the two file
helpers (:func:`load_records`, :func:`write_manifest`).
"""

from __future__ import annotations

import csv
import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

AGGREGATIONS = ("none", "daily_sum")


class IngestError(ValueError):
    """Raised for malformed inputs or impossible ingest configurations."""


@dataclass(frozen=True)
class RawRecord:
    object_key: str
    timestamp: datetime
    value: float

    @property
    def day(self) -> date:
        return self.timestamp.date()


@dataclass(frozen=True)
class ColumnMapping:
    object: str = "object"
    timestamp: str = "timestamp"
    value: str = "value"


@dataclass(frozen=True)
class IngestConfig:
    collection_start: date
    collection_end: date
    aggregation: str = "none"
    objects: int = 1
    selection_seed: int = 0

    def __post_init__(self) -> None:
        if self.collection_start > self.collection_end:
            raise IngestError(
                f"collection_start {self.collection_start} is after "
                f"collection_end {self.collection_end}"
            )
        if self.objects < 1:
            raise IngestError(f"object count must be >= 1, got {self.objects}")
        if self.aggregation not in AGGREGATIONS:
            raise IngestError(
                f"unknown aggregation {self.aggregation!r}; expected one of {AGGREGATIONS}"
            )

    @property
    def n_days(self) -> int:
        return (self.collection_end - self.collection_start).days + 1


@dataclass(frozen=True)
class ObjectSeries:
    """Contiguous daily values of one anonymized object-of-interest."""

    object_index: int
    start_date: date
    values: tuple[float, ...]

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=len(self.values) - 1)

    def __len__(self) -> int:
        return len(self.values)

    def date_at(self, offset: int) -> date:
        return self.start_date + timedelta(days=offset)


def parse_timestamp(text: str) -> datetime:
    """Parse ``YYYY-MM-DD`` or an ISO datetime (``T`` or space separated)."""
    text = text.strip()
    if len(text) == 10:
        return datetime.combine(date.fromisoformat(text), datetime.min.time())
    return datetime.fromisoformat(text)


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def load_records(
    path: str | Path,
    mapping: ColumnMapping = ColumnMapping(),
    delimiter: str | None = None,
) -> list[RawRecord]:
    """Read delimited UTF-8 text with a header row into :class:`RawRecord`.

    Line numbers in error messages are 1-based and count the header.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"raw input file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header.strip():
            return []
        delim = delimiter or _sniff_delimiter(header)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delim)
        columns = [c.strip() for c in next(reader)]
        positions = {}
        for role, name in (
            ("object", mapping.object),
            ("timestamp", mapping.timestamp),
            ("value", mapping.value),
        ):
            if name not in columns:
                raise IngestError(f"{path}: header lacks {role} column {name!r}")
            positions[role] = columns.index(name)

        records: list[RawRecord] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(columns):
                raise IngestError(
                    f"{path}:{line}: expected {len(columns)} columns, got {len(row)}"
                )
            key = row[positions["object"]].strip()
            if not key:
                raise IngestError(f"{path}:{line}: empty value in column {mapping.object!r}")
            try:
                ts = parse_timestamp(row[positions["timestamp"]])
            except ValueError:
                raise IngestError(
                    f"{path}:{line}: bad timestamp in column {mapping.timestamp!r}: "
                    f"{row[positions['timestamp']]!r}"
                ) from None
            raw_value = row[positions["value"]].strip()
            try:
                value = float(raw_value)
            except ValueError:
                raise IngestError(
                    f"{path}:{line}: bad number in column {mapping.value!r}: {raw_value!r}"
                ) from None
            if not math.isfinite(value):
                raise IngestError(
                    f"{path}:{line}: non-finite value in column {mapping.value!r}: {raw_value!r}"
                )
            records.append(RawRecord(key, ts, value))
    return records


def aggregate_daily(records: Iterable[RawRecord]) -> list[RawRecord]:
    """Sum sub-daily values per (object, calendar date).

    Timestamps are bucketed by the date as written. Output is sorted by
    (object_key, date) and carries midnight timestamps.
    """
    buckets: dict[tuple[str, date], list[float]] = defaultdict(list)
    for rec in records:
        buckets[(rec.object_key, rec.day)].append(rec.value)
    return [
        RawRecord(key, datetime.combine(day, datetime.min.time()), math.fsum(vals))
        for (key, day), vals in sorted(buckets.items())
    ]


def apply_aggregation(records: list[RawRecord], mode: str) -> list[RawRecord]:
    if mode == "none":
        return records
    if mode == "daily_sum":
        return aggregate_daily(records)
    raise IngestError(f"unknown aggregation {mode!r}")


def group_by_object(records: Iterable[RawRecord]) -> dict[str, list[tuple[date, float]]]:
    series_map: dict[str, list[tuple[date, float]]] = defaultdict(list)
    for rec in records:
        series_map[rec.object_key].append((rec.day, rec.value))
    return dict(series_map)


def filter_complete(
    series_map: Mapping[str, Sequence[tuple[date, float]]],
    start: date,
    end: date,
) -> dict[str, tuple[float, ...]]:
    """Keep objects with exactly one value for every day in ``[start, end]``.

    Days outside the period are ignored. Two values for the same day make the
    input malformed and raise instead of being merged.
    """
    n_days = (end - start).days + 1
    complete: dict[str, tuple[float, ...]] = {}
    for key in sorted(series_map):
        by_day: dict[date, float] = {}
        for day, value in series_map[key]:
            if day in by_day:
                raise IngestError(f"object {key!r} has two values for {day.isoformat()}")
            by_day[day] = value
        values = []
        for offset in range(n_days):
            day = start + timedelta(days=offset)
            if day not in by_day:
                break
            values.append(by_day[day])
        else:
            complete[key] = tuple(values)
    if not complete:
        raise IngestError(
            f"no object has a complete record for {start.isoformat()}..{end.isoformat()} "
            f"({len(series_map)} objects checked); check the collection period "
            "and the aggregation mode"
        )
    return complete


def select_and_reindex(
    complete: Mapping[str, Sequence[float]],
    n_objects: int,
    seed: int,
    start: date,
) -> tuple[list[ObjectSeries], dict[str, int]]:
    """Pick ``n_objects`` keys by a seeded shuffle of the sorted keys.

    Returns the series (indices 1..n_objects, ordered by index) and the
    private key -> index manifest.
    """
    if len(complete) < n_objects:
        raise IngestError(
            f"not enough complete objects: {len(complete)} < {n_objects}"
        )
    keys = sorted(complete)
    random.Random(seed).shuffle(keys)
    chosen = keys[:n_objects]
    series = [
        ObjectSeries(index, start, tuple(complete[key]))
        for index, key in enumerate(chosen, start=1)
    ]
    manifest = {key: index for index, key in enumerate(chosen, start=1)}
    return series, manifest


def ingest(records: list[RawRecord], config: IngestConfig) -> tuple[list[ObjectSeries], dict[str, int]]:
    """Run aggregation, completeness filtering and selection in one go."""
    daily = apply_aggregation(records, config.aggregation)
    complete = filter_complete(
        group_by_object(daily), config.collection_start, config.collection_end
    )
    return select_and_reindex(
        complete, config.objects, config.selection_seed, config.collection_start
    )


def write_manifest(path: str | Path, manifest: Mapping[str, int], **extra: object) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"objects": dict(sorted(manifest.items(), key=lambda kv: kv[1])), **extra}
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path
