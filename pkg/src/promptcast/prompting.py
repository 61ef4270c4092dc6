"""Template-based rendering of instances into input/output prompt sentences."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dataset import Instance, NumericalDataset

MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")

INPUT_PLACEHOLDERS = frozenset({"t1", "t_obs", "t_obs+1", "U_m", "values"})
VALUE_PLACEHOLDER = "x_target"

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")


class TemplateError(ValueError):
    pass


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioTemplate:
    """Context, question and answer patterns for one scenario.

    Context and question may use ``{t1}``, ``{t_obs}``, ``{t_obs+1}``,
    ``{U_m}`` and ``{values}``; the answer must hold ``{x_target}`` exactly
    once and nothing else.
    """

    name: str
    context: str
    question: str
    answer: str

    def __post_init__(self) -> None:
        for part in ("context", "question"):
            for ph in placeholders(getattr(self, part)):
                if ph not in INPUT_PLACEHOLDERS:
                    raise TemplateError(f"template {self.name!r}: unknown placeholder {{{ph}}} in {part}")
        answer_phs = placeholders(self.answer)
        if answer_phs != [VALUE_PLACEHOLDER]:
            raise TemplateError(
                f"template {self.name!r}: answer must contain exactly one {{{VALUE_PLACEHOLDER}}} "
                f"and no other placeholder, found {answer_phs}"
            )
        for part in ("context", "question", "answer"):
            if "\n" in getattr(self, part) or "\r" in getattr(self, part):
                raise TemplateError(f"template {self.name!r}: {part} spans several lines")

    @property
    def answer_affixes(self) -> tuple[str, str]:
        prefix, _, suffix = self.answer.partition("{" + VALUE_PLACEHOLDER + "}")
        return prefix, suffix


def placeholders(pattern: str) -> list[str]:
    return _PLACEHOLDER.findall(pattern)


CT = ScenarioTemplate(
    "ct",
    "From {t1} to {t_obs}, the average temperature of region {U_m} was {values} degree on each day.",
    "What is the temperature going to be on {t_obs+1}?",
    "The temperature will be {x_target} degree.",
)
ECL = ScenarioTemplate(
    "ecl",
    "From {t1} to {t_obs}, client {U_m} consumed {values} kWh of electricity on each day.",
    "What is the consumption going to be on {t_obs+1}?",
    "This client will consume {x_target} kWh of electricity.",
)
SG = ScenarioTemplate(
    "sg",
    "From {t1} to {t_obs}, there were {values} people visiting POI {U_m} on each day.",
    "How many people will visit POI {U_m} on {t_obs+1}?",
    "There will be {x_target} visitors.",
)
BUILTIN_TEMPLATES: dict[str, ScenarioTemplate] = {t.name: t for t in (CT, ECL, SG)}


def template_from_mapping(data: Mapping[str, str]) -> ScenarioTemplate:
    missing = {"name", "context", "question", "answer"} - set(data)
    if missing:
        raise TemplateError(f"template definition lacks keys {sorted(missing)}")
    return ScenarioTemplate(data["name"], data["context"], data["question"], data["answer"])


def load_templates(path: str | Path) -> dict[str, ScenarioTemplate]:
    """Load templates from a JSON or YAML file.

    The file holds either a list of ``{name, context, question, answer}``
    entries or a mapping with a ``templates`` list.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("templates", [])
    templates = [template_from_mapping(entry) for entry in data]
    return {t.name: t for t in templates}


def format_date(d: date) -> str:
    """``June 07, 2021, Monday``: English names, zero-padded day."""
    return f"{MONTHS[d.month - 1]} {d.day:02d}, {d.year}, {WEEKDAYS[d.weekday()]}"


def round_half_away(value: float) -> int:
    # Decimal(float) is exact, so ties are real ties.
    return int(Decimal(value).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def serialize_values(values: Iterable[float]) -> str:
    return ", ".join(str(round_half_away(v)) for v in values)


def _substitute(pattern: str, fields: Mapping[str, str], where: str) -> str:
    def repl(match: re.Match[str]) -> str:
        key = match.group(1)
        if key not in fields:
            raise TemplateError(f"unresolved placeholder {{{key}}} in {where}")
        return fields[key]

    return _PLACEHOLDER.sub(repl, pattern)


def render_input(inst: Instance, tpl: ScenarioTemplate, separator: str = " ") -> str:
    fields = {
        "t1": format_date(inst.window_start),
        "t_obs": format_date(inst.window_end),
        "t_obs+1": format_date(inst.target_date),
        "U_m": str(inst.object_index),
        "values": serialize_values(inst.window_values),
    }
    context = _substitute(tpl.context, fields, f"{tpl.name} context")
    question = _substitute(tpl.question, fields, f"{tpl.name} question")
    return context + separator + question


def render_answer(value: float, tpl: ScenarioTemplate) -> str:
    return _substitute(tpl.answer, {VALUE_PLACEHOLDER: str(round_half_away(value))}, f"{tpl.name} answer")


def render_output(inst: Instance, tpl: ScenarioTemplate) -> str:
    return render_answer(inst.target_value, tpl)


@dataclass(frozen=True)
class PromptPair:
    scenario: str
    split: str
    index: int
    input_prompt: str
    output_prompt: str

    def __post_init__(self) -> None:
        for name in ("input_prompt", "output_prompt"):
            text = getattr(self, name)
            if not text:
                raise PromptError(f"{self.split}[{self.index}]: empty {name}")
            if "\n" in text or "\r" in text:
                raise PromptError(f"{self.split}[{self.index}]: {name} contains a line break")


def build_prompt_pairs(
    dataset: NumericalDataset, tpl: ScenarioTemplate, separator: str = " "
) -> list[PromptPair]:
    return [
        PromptPair(dataset.scenario, dataset.split, i, render_input(inst, tpl, separator), render_output(inst, tpl))
        for i, inst in enumerate(dataset.instances)
    ]


def prompt_filenames(split: str) -> tuple[str, str]:
    return f"{split}_x_prompt.txt", f"{split}_y_prompt.txt"


def write_lines(path: Path, lines: Sequence[str]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def read_lines(path: str | Path) -> list[str]:
    """Read a one-record-per-line file; blank lines are kept as empty strings."""
    text = Path(path).read_text(encoding="utf-8")
    if not text:
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def write_prompt_files(pairs: Sequence[PromptPair], split: str, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``{split}_x_prompt.txt`` and ``{split}_y_prompt.txt``, line-aligned."""
    for expected, pair in enumerate(pairs):
        if pair.index != expected:
            raise PromptError(f"pair at position {expected} has index {pair.index}")
        if pair.split != split:
            raise PromptError(f"pair {pair.index} belongs to split {pair.split!r}, not {split!r}")
        for text in (pair.input_prompt, pair.output_prompt):
            if "\n" in text or "\r" in text:
                raise PromptError(f"pair {pair.index} contains a line break")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x_name, y_name = prompt_filenames(split)
    x_path, y_path = out_dir / x_name, out_dir / y_name
    write_lines(x_path, [p.input_prompt for p in pairs])
    write_lines(y_path, [p.output_prompt for p in pairs])
    return x_path, y_path
