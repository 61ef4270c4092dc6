"""Prompt-based time series forecasting: numeric series to prompt datasets,
pluggable forecasting backends, answer decoding and evaluation."""

from .dataset import Instance, NumericalDataset, SplitSpec, build_datasets, make_instances, split_chronological
from .decoding import DecodedPrediction, batch_decode, parse_output
from .evaluation import EvalResult, aggregate_runs, evaluate, mae, missing_rate, rmse
from .ingest import ObjectSeries, RawRecord
from .prompting import BUILTIN_TEMPLATES, ScenarioTemplate, format_date, render_input, render_output, serialize_values

__all__ = [
    "BUILTIN_TEMPLATES",
    "DecodedPrediction",
    "EvalResult",
    "Instance",
    "NumericalDataset",
    "ObjectSeries",
    "RawRecord",
    "ScenarioTemplate",
    "SplitSpec",
    "aggregate_runs",
    "batch_decode",
    "build_datasets",
    "evaluate",
    "format_date",
    "mae",
    "make_instances",
    "missing_rate",
    "parse_output",
    "render_input",
    "render_output",
    "rmse",
    "serialize_values",
    "split_chronological",
]
