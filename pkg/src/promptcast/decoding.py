"""Turn generated answer sentences back into numbers.

Strict mode only accepts the scenario's answer sentence with an integer in
the value slot. Lenient mode tries strict first and otherwise takes the
first number in the text, accepting a detached minus sign ("- 5") and
decimals (rounded half away from zero).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Literal

from .prompting import ScenarioTemplate, round_half_away

Mode = Literal["strict", "lenient"]

_LENIENT_NUMBER = re.compile(r"(?P<sign>-\s*)?(?P<num>\d+(?:\.\d+)?)")


@dataclass(frozen=True)
class DecodedPrediction:
    index: int
    raw_text: str
    value: float | None = None

    @property
    def status(self) -> str:
        return "missing" if self.value is None else "decoded"

    @property
    def decoded(self) -> bool:
        return self.value is not None


def _fixed_text_pattern(text: str) -> str:
    return r"\s+".join(re.escape(word) for word in text.split())


@lru_cache(maxsize=64)
def strict_pattern(answer: str) -> re.Pattern[str]:
    prefix, _, suffix = answer.partition("{x_target}")
    pre = _fixed_text_pattern(prefix)
    post = _fixed_text_pattern(suffix)
    # Whitespace adjacent to the slot is optional on both sides.
    return re.compile(
        rf"^\s*{pre}\s*(?P<value>[-+]?\d+)\s*{post}\s*$", re.IGNORECASE
    )


def parse_output(text: str, tpl: ScenarioTemplate, mode: Mode = "strict", index: int = 0) -> DecodedPrediction:
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown decode mode {mode!r}")
    match = strict_pattern(tpl.answer).match(text)
    if match:
        return DecodedPrediction(index, text, float(int(match.group("value"))))
    if mode == "lenient":
        match = _LENIENT_NUMBER.search(text)
        if match:
            value = float(match.group("num"))
            if match.group("sign"):
                value = -value
            return DecodedPrediction(index, text, float(round_half_away(value)))
    return DecodedPrediction(index, text, None)


def batch_decode(texts: Iterable[str], tpl: ScenarioTemplate, mode: Mode = "strict") -> list[DecodedPrediction]:
    return [parse_output(text, tpl, mode, index=i) for i, text in enumerate(texts)]


def generation_filename(split: str, backend: str) -> str:
    return f"{split}_yhat_{backend}.txt"
