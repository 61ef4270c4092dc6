"""RMSE, MAE and Missing Rate, per run and aggregated over seeds."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass
from typing import Sequence

from .decoding import DecodedPrediction


class EvaluationError(ValueError):
    pass


def missing_rate(n_test: int, n_decoded: int) -> float:
    """Percentage of test instances without a decodable prediction."""
    if n_test <= 0:
        raise EvaluationError("missing rate needs n_test > 0")
    if not 0 <= n_decoded <= n_test:
        raise EvaluationError(f"n_decoded={n_decoded} outside [0, {n_test}]")
    # integer numerator first: a single rounding step
    return 100 * (n_test - n_decoded) / n_test


def _check_pairs(pred: Sequence[float], truth: Sequence[float]) -> None:
    if len(pred) != len(truth):
        raise EvaluationError(f"length mismatch: {len(pred)} predictions vs {len(truth)} targets")
    if not pred:
        raise EvaluationError("cannot score empty sequences")


def rmse(pred: Sequence[float], truth: Sequence[float]) -> float:
    _check_pairs(pred, truth)
    return math.sqrt(math.fsum((p - t) ** 2 for p, t in zip(pred, truth)) / len(pred))


def mae(pred: Sequence[float], truth: Sequence[float]) -> float:
    _check_pairs(pred, truth)
    return math.fsum(abs(p - t) for p, t in zip(pred, truth)) / len(pred)


@dataclass(frozen=True)
class EvalResult:
    rmse: float | None
    mae: float | None
    missing_rate: float
    n_test: int
    n_decoded: int
    scenario: str = ""
    backend: str = ""
    seed: int = 0


def evaluate(
    preds: Sequence[DecodedPrediction],
    truths: Sequence[float],
    *,
    scenario: str = "",
    backend: str = "",
    seed: int = 0,
) -> EvalResult:
    """Score decoded predictions; missing ones are left out of RMSE/MAE.

    With nothing decoded, RMSE and MAE are ``None`` and the missing rate is 100.
    """
    if len(preds) != len(truths):
        raise EvaluationError(f"length mismatch: {len(preds)} predictions vs {len(truths)} targets")
    pairs = [(p.value, t) for p, t in zip(preds, truths) if p.value is not None]
    n_test = len(truths)
    if pairs:
        p, t = zip(*pairs)
        r, m = rmse(p, t), mae(p, t)
    else:
        r = m = None
    return EvalResult(r, m, missing_rate(n_test, len(pairs)), n_test, len(pairs), scenario, backend, seed)


def numeric_predictions(values: Sequence[float]) -> list[DecodedPrediction]:
    return [DecodedPrediction(i, repr(float(v)), float(v)) for i, v in enumerate(values)]


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    std: float | None


@dataclass(frozen=True)
class AggregateReport:
    scenario: str
    backend: str
    n_runs: int
    rmse: MetricSummary
    mae: MetricSummary
    missing_rate: MetricSummary


def _summarize(values: list[float | None]) -> MetricSummary:
    defined = [v for v in values if v is not None]
    if not defined:
        return MetricSummary(None, None)
    return MetricSummary(statistics.fmean(defined), statistics.pstdev(defined))


def aggregate_runs(results: Sequence[EvalResult]) -> AggregateReport:
    """Mean and population standard deviation of each metric over runs.

    Runs where RMSE/MAE are undefined do not contribute to those two metrics.
    """
    if not results:
        raise EvaluationError("no runs to aggregate")
    keys = {(r.scenario, r.backend) for r in results}
    if len(keys) > 1:
        raise EvaluationError(f"runs mix scenario/backend pairs: {sorted(keys)}")
    scenario, backend = keys.pop()
    return AggregateReport(
        scenario,
        backend,
        len(results),
        _summarize([r.rmse for r in results]),
        _summarize([r.mae for r in results]),
        _summarize([r.missing_rate for r in results]),
    )


# -- report rendering ---------------------------------------------------------

def report_json(results: Sequence[EvalResult], aggregates: Sequence[AggregateReport], **meta: object) -> str:
    payload = {
        **meta,
        "runs": [asdict(r) for r in results],
        "aggregate": [asdict(a) for a in aggregates],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _cell(summary: MetricSummary, digits: int) -> str:
    if summary.mean is None:
        return "n/a"
    return f"{summary.mean:.{digits}f}±{summary.std:.{digits}f}"


def report_table(aggregates: Sequence[AggregateReport], digits: int = 3) -> str:
    header = ["scenario", "backend", "RMSE", "MAE", "MissingRate(%)"]
    rows = [
        [a.scenario, a.backend, _cell(a.rmse, digits), _cell(a.mae, digits), _cell(a.missing_rate, digits)]
        for a in aggregates
    ]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header, *rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
