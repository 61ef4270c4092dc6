"""Chronological splitting and sliding-window instance construction."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable

from .ingest import ObjectSeries

SPLITS = ("train", "val", "test")
DEFAULT_T_OBS = 15


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    """Split boundaries as explicit dates, or a chronological ratio.

    ``train_end`` is the last training day and ``val_end`` the last
    validation day; the test split runs to the end of the series. In ratio
    mode the boundaries are derived by floor division of the day count.
    """

    train_end: date | None = None
    val_end: date | None = None
    ratio: tuple[int, int, int] = (7, 1, 2)

    def boundaries(self, start: date, end: date) -> tuple[date, date]:
        if self.train_end is None and self.val_end is None:
            n_days = (end - start).days + 1
            total = sum(self.ratio)
            n_train = n_days * self.ratio[0] // total
            n_val = n_days * self.ratio[1] // total
            train_end = start + timedelta(days=n_train - 1)
            val_end = train_end + timedelta(days=n_val)
        elif self.train_end is None or self.val_end is None:
            raise DatasetError("train_end and val_end must be given together")
        else:
            train_end, val_end = self.train_end, self.val_end
        if not start <= train_end < val_end < end:
            raise DatasetError(
                f"split boundaries must satisfy {start} <= train_end ({train_end}) "
                f"< val_end ({val_end}) < {end}"
            )
        return train_end, val_end


@dataclass(frozen=True)
class Instance:
    object_index: int
    window_start: date
    window_values: tuple[float, ...]
    target_value: float

    @property
    def t_obs(self) -> int:
        return len(self.window_values)

    @property
    def window_end(self) -> date:
        return self.window_start + timedelta(days=self.t_obs - 1)

    @property
    def target_date(self) -> date:
        return self.window_start + timedelta(days=self.t_obs)


@dataclass
class NumericalDataset:
    scenario: str
    split: str
    instances: list[Instance] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def targets(self) -> list[float]:
        return [inst.target_value for inst in self.instances]


def count_instances(days: int, objects: int, t_obs: int = DEFAULT_T_OBS) -> int:
    """Closed-form instance count for ``objects`` series of ``days`` each."""
    return objects * max(days - t_obs, 0)


def split_chronological(
    series: ObjectSeries, spec: SplitSpec
) -> tuple[ObjectSeries, ObjectSeries, ObjectSeries]:
    train_end, val_end = spec.boundaries(series.start_date, series.end_date)
    n_train = (train_end - series.start_date).days + 1
    n_val = (val_end - train_end).days
    v = series.values
    return (
        ObjectSeries(series.object_index, series.start_date, v[:n_train]),
        ObjectSeries(series.object_index, train_end + timedelta(days=1), v[n_train : n_train + n_val]),
        ObjectSeries(series.object_index, val_end + timedelta(days=1), v[n_train + n_val :]),
    )


def make_instances(segment: ObjectSeries, t_obs: int = DEFAULT_T_OBS) -> list[Instance]:
    """Slide a ``t_obs + 1`` day window over the segment with a 1-day step."""
    if t_obs < 1:
        raise DatasetError(f"t_obs must be >= 1, got {t_obs}")
    v = segment.values
    return [
        Instance(segment.object_index, segment.date_at(i), tuple(v[i : i + t_obs]), v[i + t_obs])
        for i in range(len(v) - t_obs)
    ]


def build_datasets(
    scenario: str,
    series: Iterable[ObjectSeries],
    spec: SplitSpec,
    t_obs: int = DEFAULT_T_OBS,
) -> dict[str, NumericalDataset]:
    """Window each split independently; order is (object_index, window_start)."""
    out = {name: NumericalDataset(scenario, name) for name in SPLITS}
    for s in sorted(series, key=lambda s: s.object_index):
        for name, segment in zip(SPLITS, split_chronological(s, spec)):
            out[name].instances.extend(make_instances(segment, t_obs))
    return out


# -- numerical dataset file --------------------------------------------------

def format_number(value: float) -> str:
    """Shortest text that parses back to ``value``; integral values drop ``.0``."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def _header(t_obs: int) -> list[str]:
    return ["object_index", "window_start"] + [f"x{i}" for i in range(1, t_obs + 1)] + ["target"]


def dumps_numerical(dataset: NumericalDataset, t_obs: int | None = None) -> str:
    if t_obs is None:
        t_obs = dataset.instances[0].t_obs if dataset.instances else DEFAULT_T_OBS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_header(t_obs))
    for inst in dataset.instances:
        if inst.t_obs != t_obs:
            raise DatasetError(f"mixed window lengths in dataset: {inst.t_obs} != {t_obs}")
        writer.writerow(
            [inst.object_index, inst.window_start.isoformat()]
            + [format_number(x) for x in inst.window_values]
            + [format_number(inst.target_value)]
        )
    return buf.getvalue()


def write_numerical(dataset: NumericalDataset, path: str | Path, t_obs: int | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_numerical(dataset, t_obs))
    return path


def read_numerical(path: str | Path, scenario: str = "", split: str = "") -> NumericalDataset:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["object_index", "window_start"] or header[-1] != "target":
            raise DatasetError(f"{path}: not a numerical dataset file")
        t_obs = len(header) - 3
        instances = []
        for row in reader:
            if len(row) != len(header):
                raise DatasetError(f"{path}:{reader.line_num}: expected {len(header)} fields")
            instances.append(
                Instance(
                    int(row[0]),
                    date.fromisoformat(row[1]),
                    tuple(float(x) for x in row[2 : 2 + t_obs]),
                    float(row[-1]),
                )
            )
    return NumericalDataset(scenario, split, instances)


def numerical_filename(split: str) -> str:
    return f"{split}_numerical.csv"

