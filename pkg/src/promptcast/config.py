"""Experiment configuration: one JSON or YAML file describes a whole run.

Example (YAML)::

    output_dir: out
    t_obs: 15
    seeds: [0, 1, 2, 3, 4]
    scenarios:
      - name: ct
        template: ct                 # built-in name or {context, question, answer}
        input: {path: raw/ct.csv, object_column: city, timestamp_column: date,
                value_column: temp}
        ingest: {collection_start: 2017-01-01, collection_end: 2020-04-30,
                 objects: 110, aggregation: none, selection_seed: 0}
        split: {train_end: 2019-04-30, val_end: 2019-08-31}   # or {ratio: [7, 1, 2]}
    backends:
      - {name: cy, kind: cy}
      - {name: bart, kind: lm_service, endpoint: "http://localhost:8000/generate"}
    protocol: {kind: zero_shot, train_scenarios: [ct, ecl], test_scenario: sg}

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Mapping

from .dataset import DEFAULT_T_OBS, SplitSpec
from .forecast import BackendSpec
from .ingest import ColumnMapping, IngestConfig
from .prompting import BUILTIN_TEMPLATES, ScenarioTemplate, load_templates, template_from_mapping


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    template: ScenarioTemplate
    input_path: Path
    ingest: IngestConfig
    split: SplitSpec
    columns: ColumnMapping = ColumnMapping()
    delimiter: str | None = None


@dataclass(frozen=True)
class Protocol:
    kind: str = "standard"
    train_scenarios: tuple[str, ...] = ()
    test_scenario: str | None = None

    @property
    def is_zero_shot(self) -> bool:
        return self.kind == "zero_shot"


@dataclass
class ExperimentConfig:
    scenarios: list[ScenarioConfig]
    backends: list[BackendSpec] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    t_obs: int = DEFAULT_T_OBS
    protocol: Protocol = Protocol()
    output_dir: Path = Path("out")
    separator: str = " "
    decode_mode: str = "strict"

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate scenario names in {names}")
        backend_names = [b.name for b in self.backends]
        if len(set(backend_names)) != len(backend_names):
            raise ConfigError(f"duplicate backend names in {backend_names}")
        if self.decode_mode not in ("strict", "lenient"):
            raise ConfigError(f"decode_mode must be strict or lenient, got {self.decode_mode!r}")
        if self.protocol.is_zero_shot:
            check_zero_shot(self.protocol, names)

    def scenario(self, name: str) -> ScenarioConfig:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise ConfigError(f"unknown scenario {name!r}; configured: {[s.name for s in self.scenarios]}")

    def backend(self, name: str) -> BackendSpec:
        for b in self.backends:
            if b.name == name:
                return b
        raise ConfigError(f"unknown backend {name!r}; configured: {[b.name for b in self.backends]}")

    # Output layout. Manifests sit beside, not inside, the published datasets.
    @property
    def datasets_dir(self) -> Path:
        return self.output_dir / "datasets"

    @property
    def manifests_dir(self) -> Path:
        return self.output_dir / "manifests"

    @property
    def zero_shot_dir(self) -> Path:
        return self.output_dir / "zero_shot" / str(self.protocol.test_scenario)

    def runs_dir(self, scenario: str, seed: int) -> Path:
        return self.output_dir / "runs" / self.protocol.kind / scenario / f"seed_{seed}"

    @property
    def reports_dir(self) -> Path:
        return self.output_dir / "reports"


def check_zero_shot(protocol: Protocol, scenario_names: list[str]) -> None:
    if not protocol.train_scenarios:
        raise ConfigError("zero_shot protocol needs at least one train scenario")
    if protocol.test_scenario is None:
        raise ConfigError("zero_shot protocol needs a test_scenario")
    if protocol.test_scenario in protocol.train_scenarios:
        raise ConfigError(
            f"test scenario {protocol.test_scenario!r} is also a train scenario"
        )
    for name in (*protocol.train_scenarios, protocol.test_scenario):
        if name not in scenario_names:
            raise ConfigError(f"zero_shot protocol names unknown scenario {name!r}")


def _date(value: Any, key: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{key}: not an ISO date: {value!r}") from None


def _template(value: Any, name: str, custom: Mapping[str, ScenarioTemplate]) -> ScenarioTemplate:
    if value is None:
        value = name
    if isinstance(value, str):
        if value in custom:
            return custom[value]
        if value in BUILTIN_TEMPLATES:
            return BUILTIN_TEMPLATES[value]
        raise ConfigError(f"scenario {name!r}: unknown template {value!r}")
    return template_from_mapping({"name": name, **value})


def _scenario(data: Mapping[str, Any], base: Path, custom: Mapping[str, ScenarioTemplate]) -> ScenarioConfig:
    try:
        name = data["name"]
        inp = data["input"]
        ing = data["ingest"]
    except KeyError as exc:
        raise ConfigError(f"scenario entry lacks key {exc}") from None
    split = data.get("split", {})
    if "train_end" in split or "val_end" in split:
        spec = SplitSpec(
            _date(split.get("train_end"), f"{name}.split.train_end"),
            _date(split.get("val_end"), f"{name}.split.val_end"),
        )
    else:
        spec = SplitSpec(ratio=tuple(split.get("ratio", (7, 1, 2))))
    return ScenarioConfig(
        name=name,
        template=_template(data.get("template"), name, custom),
        input_path=(base / inp["path"]).resolve(),
        ingest=IngestConfig(
            _date(ing["collection_start"], f"{name}.ingest.collection_start"),
            _date(ing["collection_end"], f"{name}.ingest.collection_end"),
            aggregation=ing.get("aggregation", "none"),
            objects=int(ing.get("objects", 1)),
            selection_seed=int(ing.get("selection_seed", 0)),
        ),
        split=spec,
        columns=ColumnMapping(
            inp.get("object_column", "object"),
            inp.get("timestamp_column", "timestamp"),
            inp.get("value_column", "value"),
        ),
        delimiter=inp.get("delimiter"),
    )


def config_from_mapping(data: Mapping[str, Any], base: Path = Path(".")) -> ExperimentConfig:
    custom: dict[str, ScenarioTemplate] = {}
    if "templates_file" in data:
        custom = load_templates(base / data["templates_file"])
    proto = data.get("protocol") or {"kind": "standard"}
    if isinstance(proto, str):
        proto = {"kind": proto}
    if proto.get("kind", "standard") not in ("standard", "zero_shot"):
        raise ConfigError(f"unknown protocol {proto.get('kind')!r}")
    try:
        return ExperimentConfig(
            scenarios=[_scenario(s, base, custom) for s in data.get("scenarios", [])],
            backends=[BackendSpec.from_mapping(b) for b in data.get("backends", [])],
            seeds=[int(s) for s in data.get("seeds", [0])],
            t_obs=int(data.get("t_obs", DEFAULT_T_OBS)),
            protocol=Protocol(
                proto.get("kind", "standard"),
                tuple(proto.get("train_scenarios", ())),
                proto.get("test_scenario"),
            ),
            output_dir=(base / data.get("output_dir", "out")).resolve(),
            separator=data.get("separator", " "),
            decode_mode=data.get("decode_mode", "strict"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_mapping(data, path.parent.resolve())
