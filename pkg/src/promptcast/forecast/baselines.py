"""Naive numerical forecasters over a single observation window.

All three are stateless: they look only at the instance's own window, so
they are pure functions of the :class:`~promptcast.dataset.Instance`.
"""

from __future__ import annotations

import math
from typing import Callable

from ..dataset import Instance
from ..prompting import ScenarioTemplate, render_answer

WEEK = 7


class BaselineError(ValueError):
    pass


def predict_cy(inst: Instance) -> float:
    """Copy Yesterday: the last observed value."""
    if not inst.window_values:
        raise BaselineError("empty observation window")
    return inst.window_values[-1]


def predict_ha(inst: Instance) -> float:
    """Historical Average: mean of the observation window."""
    if not inst.window_values:
        raise BaselineError("empty observation window")
    return math.fsum(inst.window_values) / len(inst.window_values)


def predict_clw(inst: Instance) -> float:
    """Copy Last Week: the value observed 7 days before the target date."""
    if inst.t_obs < WEEK:
        raise BaselineError(f"copy-last-week needs t_obs >= {WEEK}, got {inst.t_obs}")
    return inst.window_values[inst.t_obs - WEEK]


NUMERIC_BASELINES: dict[str, Callable[[Instance], float]] = {
    "cy": predict_cy,
    "ha": predict_ha,
    "clw": predict_clw,
}


def oracle_wrap(inst: Instance, inner: str, tpl: ScenarioTemplate) -> str:
    """Render a numeric baseline's prediction as the scenario answer sentence.

    Acts as a perfect "language model" for testing the prompt pipeline.
    """
    try:
        predict = NUMERIC_BASELINES[inner]
    except KeyError:
        raise BaselineError(f"unknown inner baseline {inner!r}") from None
    return render_answer(predict(inst), tpl)
