"""Prediction backends behind one interface.

Numeric backends (``cy``, ``ha``, ``clw``) emit numbers; text backends
(``lm_service``, ``oracle_wrap``, ``fixed_mock``) emit answer sentences that
still have to be decoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..dataset import NumericalDataset
from ..prompting import ScenarioTemplate
from .baselines import (
    NUMERIC_BASELINES,
    BaselineError,
    oracle_wrap,
    predict_clw,
    predict_cy,
    predict_ha,
)
from .lm_service import LMServiceClient, RetryPolicy, ServiceUnavailableError

NUMERIC_KINDS = frozenset(NUMERIC_BASELINES)
TEXT_KINDS = frozenset({"lm_service", "oracle_wrap", "fixed_mock"})

__all__ = [
    "BackendSpec",
    "BaselineError",
    "ForecastRun",
    "LMServiceClient",
    "RetryPolicy",
    "ServiceUnavailableError",
    "oracle_wrap",
    "predict_clw",
    "predict_cy",
    "predict_ha",
    "run_backend",
]


@dataclass(frozen=True)
class BackendSpec:
    name: str
    kind: str
    inner: str | None = None
    endpoint: str | None = None
    api_key_env: str | None = None
    max_new_tokens: int = 32
    temperature: float = 0.0
    seed: int = 0
    concurrency_limit: int = 4
    max_attempts: int = 3
    backoff: float = 0.5
    timeout: float = 30.0
    fixed_text: str = ""
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in NUMERIC_KINDS | TEXT_KINDS:
            raise ValueError(f"backend {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "oracle_wrap" and self.inner not in NUMERIC_KINDS:
            raise ValueError(f"backend {self.name!r}: oracle_wrap needs inner in {sorted(NUMERIC_KINDS)}")
        if self.kind == "lm_service" and not self.endpoint:
            raise ValueError(f"backend {self.name!r}: lm_service needs an endpoint")
        if self.concurrency_limit < 1:
            raise ValueError(f"backend {self.name!r}: concurrency_limit must be >= 1")
        if self.temperature < 0:
            raise ValueError(f"backend {self.name!r}: temperature must be >= 0")

    @property
    def is_numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "BackendSpec":
        data = dict(data)
        data.setdefault("kind", data.get("name"))
        return cls(**data)

    def client(self, seed: int | None = None) -> LMServiceClient:
        return LMServiceClient(
            self.endpoint or "",
            max_new_tokens=self.max_new_tokens,
            temperature=self.temperature,
            seed=self.seed if seed is None else seed,
            concurrency_limit=self.concurrency_limit,
            retry=RetryPolicy(self.max_attempts, self.backoff),
            timeout=self.timeout,
            api_key_env=self.api_key_env,
        )


@dataclass
class ForecastRun:
    scenario: str
    split: str
    backend: BackendSpec
    seed: int
    outputs: list = field(default_factory=list)


def run_backend(
    spec: BackendSpec,
    dataset: NumericalDataset,
    tpl: ScenarioTemplate,
    prompts: Sequence[str] | None = None,
    seed: int = 0,
) -> ForecastRun:
    """Produce one output per instance, in instance order.

    ``prompts`` (the rendered input prompts) is required for ``lm_service``.
    """
    run = ForecastRun(dataset.scenario, dataset.split, spec, seed)
    if spec.is_numeric:
        predict = NUMERIC_BASELINES[spec.kind]
        run.outputs = [predict(inst) for inst in dataset.instances]
    elif spec.kind == "oracle_wrap":
        run.outputs = [oracle_wrap(inst, spec.inner, tpl) for inst in dataset.instances]
    elif spec.kind == "fixed_mock":
        run.outputs = [spec.fixed_text] * len(dataset)
    else:
        if prompts is None or len(prompts) != len(dataset):
            raise ValueError(
                f"lm_service needs one prompt per instance "
                f"({len(dataset)} instances, {None if prompts is None else len(prompts)} prompts)"
            )
        run.outputs = spec.client(seed).generate(prompts)
    return run
