"""Command line pipeline: build -> prompt -> (assemble-zero-shot) -> forecast -> eval.

Exit codes: 0 success, 1 data errors found while forecasting or evaluating,
2 configuration or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ExperimentConfig, ScenarioConfig, check_zero_shot, load_config
from .dataset import (
    SPLITS,
    DatasetError,
    build_datasets,
    format_number,
    numerical_filename,
    read_numerical,
    write_numerical,
)
from .decoding import batch_decode, generation_filename
from .evaluation import EvaluationError, aggregate_runs, evaluate, numeric_predictions, report_json, report_table
from .forecast import BackendSpec, ServiceUnavailableError, run_backend
from .ingest import IngestError, ingest, load_records, write_manifest
from .prompting import (
    PromptError,
    TemplateError,
    build_prompt_pairs,
    prompt_filenames,
    read_lines,
    write_lines,
    write_prompt_files,
)

logger = logging.getLogger("promptcast")

EXIT_DATA = 1
EXIT_INPUT = 2


class AlignmentError(EvaluationError):
    """Files that must be line-aligned have different lengths."""


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def check_alignment(counts: dict[Path, int]) -> int:
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{p} has {n}" for p, n in counts.items())
        raise AlignmentError(f"misaligned files: {detail}")
    return next(iter(counts.values()), 0)


def _selected_scenarios(config: ExperimentConfig, name: str | None) -> list[ScenarioConfig]:
    if name is not None:
        return [config.scenario(name)]
    return list(config.scenarios)


def _selected_backends(config: ExperimentConfig, name: str | None) -> list[BackendSpec]:
    if name is not None:
        return [config.backend(name)]
    return list(config.backends)


def _splits(split: str | None) -> Sequence[str]:
    return SPLITS if split is None else (split,)


# -- commands -----------------------------------------------------------------

def cmd_build(config: ExperimentConfig, scenario: str | None = None) -> dict[str, dict[str, int]]:
    """Ingest raw files and write the numerical datasets plus private manifests."""
    counts: dict[str, dict[str, int]] = {}
    for sc in _selected_scenarios(config, scenario):
        records = load_records(sc.input_path, sc.columns, sc.delimiter)
        series, keys = ingest(records, sc.ingest)
        datasets = build_datasets(sc.name, series, sc.split, config.t_obs)
        out_dir = config.datasets_dir / sc.name
        for split, ds in datasets.items():
            write_numerical(ds, out_dir / numerical_filename(split), config.t_obs)
        train_end, val_end = sc.split.boundaries(sc.ingest.collection_start, sc.ingest.collection_end)
        counts[sc.name] = {split: len(ds) for split, ds in datasets.items()}
        write_manifest(
            config.manifests_dir / f"{sc.name}.json",
            keys,
            scenario=sc.name,
            collection_start=sc.ingest.collection_start.isoformat(),
            collection_end=sc.ingest.collection_end.isoformat(),
            train_end=train_end.isoformat(),
            val_end=val_end.isoformat(),
            t_obs=config.t_obs,
            instances=counts[sc.name],
        )
        logger.info("built %s: %s", sc.name, counts[sc.name])
    return counts


def _load_dataset(config: ExperimentConfig, scenario: str, split: str):
    path = config.datasets_dir / scenario / numerical_filename(split)
    if not path.is_file():
        raise FileNotFoundError(f"numerical dataset not found: {path} (run `build` first)")
    return read_numerical(path, scenario, split)


def cmd_prompt(config: ExperimentConfig, scenario: str | None = None, split: str | None = None) -> dict[str, dict[str, int]]:
    counts: dict[str, dict[str, int]] = {}
    for sc in _selected_scenarios(config, scenario):
        counts[sc.name] = {}
        for sp in _splits(split):
            ds = _load_dataset(config, sc.name, sp)
            pairs = build_prompt_pairs(ds, sc.template, config.separator)
            write_prompt_files(pairs, sp, config.datasets_dir / sc.name)
            counts[sc.name][sp] = len(pairs)
    return counts


def cmd_assemble_zero_shot(config: ExperimentConfig) -> Path:
    """Concatenate the train prompts of the train scenarios; copy the held-out test split."""
    proto = config.protocol
    if not proto.is_zero_shot:
        raise ConfigError("assemble-zero-shot needs protocol.kind = zero_shot in the config")
    check_zero_shot(proto, [s.name for s in config.scenarios])
    out_dir = config.zero_shot_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    sources = []
    combined_x: list[str] = []
    combined_y: list[str] = []
    x_name, y_name = prompt_filenames("train")
    for name in proto.train_scenarios:
        src = config.datasets_dir / name
        x_path, y_path = src / x_name, src / y_name
        for p in (x_path, y_path):
            if not p.is_file():
                raise FileNotFoundError(f"prompt file not found: {p} (run `prompt` first)")
        xs, ys = read_lines(x_path), read_lines(y_path)
        check_alignment({x_path: len(xs), y_path: len(ys)})
        combined_x.extend(xs)
        combined_y.extend(ys)
        sources.append({"scenario": name, "lines": len(xs), "x_sha256": sha256(x_path), "y_sha256": sha256(y_path)})
    write_lines(out_dir / x_name, combined_x)
    write_lines(out_dir / y_name, combined_y)

    test_src = config.datasets_dir / proto.test_scenario
    copied = {}
    for fname in (*prompt_filenames("test"), numerical_filename("test")):
        src = test_src / fname
        if not src.is_file():
            raise FileNotFoundError(f"test file not found: {src}")
        shutil.copyfile(src, out_dir / fname)
        copied[fname] = sha256(src)

    provenance = {
        "protocol": "zero_shot",
        "train_scenarios": list(proto.train_scenarios),
        "test_scenario": proto.test_scenario,
        "train_sources": sources,
        "train_lines": len(combined_x),
        "train_x_sha256": sha256(out_dir / x_name),
        "train_y_sha256": sha256(out_dir / y_name),
        "test_files_sha256": copied,
    }
    (out_dir / "provenance.json").write_text(json.dumps(provenance, indent=2) + "\n", encoding="utf-8")
    return out_dir


def _forecast_scenarios(config: ExperimentConfig, scenario: str | None) -> list[ScenarioConfig]:
    if config.protocol.is_zero_shot:
        test = config.protocol.test_scenario
        if scenario is not None and scenario != test:
            raise ConfigError(f"zero_shot protocol evaluates only {test!r}, not {scenario!r}")
        return [config.scenario(test)]
    return _selected_scenarios(config, scenario)


def _prompt_source_dir(config: ExperimentConfig, scenario: str) -> Path:
    if config.protocol.is_zero_shot:
        return config.zero_shot_dir
    return config.datasets_dir / scenario


def cmd_forecast(
    config: ExperimentConfig,
    backend: str | None = None,
    split: str = "test",
    scenario: str | None = None,
) -> list[Path]:
    """Write one ``{split}_yhat_{backend}.txt`` per (scenario, backend, seed)."""
    if config.protocol.is_zero_shot and split != "test":
        raise ConfigError("zero_shot protocol forecasts the test split only")
    written = []
    for sc in _forecast_scenarios(config, scenario):
        src_dir = _prompt_source_dir(config, sc.name)
        num_path = src_dir / numerical_filename(split)
        if not num_path.is_file():
            raise FileNotFoundError(f"numerical dataset not found: {num_path}")
        ds = read_numerical(num_path, sc.name, split)
        for spec in _selected_backends(config, backend):
            prompts = None
            if spec.kind == "lm_service":
                x_path = src_dir / prompt_filenames(split)[0]
                if not x_path.is_file():
                    raise FileNotFoundError(f"prompt file not found: {x_path} (run `prompt` first)")
                prompts = read_lines(x_path)
                check_alignment({num_path: len(ds), x_path: len(prompts)})
            for seed in config.seeds:
                run = run_backend(spec, ds, sc.template, prompts, seed)
                if spec.is_numeric:
                    lines = [format_number(v) for v in run.outputs]
                else:
                    lines = [" ".join(text.split()) for text in run.outputs]
                out = config.runs_dir(sc.name, seed) / generation_filename(split, spec.name)
                out.parent.mkdir(parents=True, exist_ok=True)
                write_lines(out, lines)
                written.append(out)
                logger.info("forecast %s/%s seed %d: %d outputs", sc.name, spec.name, seed, len(lines))
    return written


def _numeric_lines(path: Path, lines: list[str]) -> list[float]:
    values = []
    for i, line in enumerate(lines, start=1):
        try:
            values.append(float(line))
        except ValueError:
            raise EvaluationError(f"{path}:{i}: not a number: {line!r}") from None
    return values


def cmd_eval(
    config: ExperimentConfig,
    backend: str | None = None,
    split: str = "test",
    scenario: str | None = None,
) -> Path:
    """Decode and score every run; write ``reports/{protocol}_{split}.json|txt``."""
    results = []
    aggregates = []
    for sc in _forecast_scenarios(config, scenario):
        src_dir = _prompt_source_dir(config, sc.name)
        num_path = src_dir / numerical_filename(split)
        x_path, y_path = (src_dir / n for n in prompt_filenames(split))
        for p in (num_path, x_path, y_path):
            if not p.is_file():
                raise FileNotFoundError(f"required file not found: {p}")
        ds = read_numerical(num_path, sc.name, split)
        n = check_alignment({num_path: len(ds), x_path: len(read_lines(x_path)), y_path: len(read_lines(y_path))})
        truths = ds.targets
        for spec in _selected_backends(config, backend):
            label = spec.label or spec.name
            runs = []
            for seed in config.seeds:
                yhat_path = config.runs_dir(sc.name, seed) / generation_filename(split, spec.name)
                if not yhat_path.is_file():
                    raise FileNotFoundError(f"prediction file not found: {yhat_path} (run `forecast` first)")
                lines = read_lines(yhat_path)
                check_alignment({num_path: n, yhat_path: len(lines)})
                if spec.is_numeric:
                    preds = numeric_predictions(_numeric_lines(yhat_path, lines))
                else:
                    preds = batch_decode(lines, sc.template, config.decode_mode)
                runs.append(evaluate(preds, truths, scenario=sc.name, backend=label, seed=seed))
            results.extend(runs)
            aggregates.append(aggregate_runs(runs))

    config.reports_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{config.protocol.kind}_{split}"
    json_path = config.reports_dir / f"{stem}.json"
    json_path.write_text(
        report_json(results, aggregates, protocol=config.protocol.kind, split=split, decode_mode=config.decode_mode),
        encoding="utf-8",
    )
    (config.reports_dir / f"{stem}.txt").write_text(report_table(aggregates), encoding="utf-8")
    return json_path


# -- argument parsing -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="promptcast", description="Prompt-based time series forecasting toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", required=True, type=Path, help="experiment config (JSON or YAML)")
        p.add_argument("--out", type=Path, help="override output_dir")
        p.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
        return p

    common(sub.add_parser("build", help="ingest raw data and write numerical datasets")).add_argument("--scenario")
    p = common(sub.add_parser("prompt", help="render prompt files from numerical datasets"))
    p.add_argument("--scenario")
    p.add_argument("--split", choices=SPLITS)
    common(sub.add_parser("assemble-zero-shot", help="combine train prompts for the zero-shot protocol"))
    for name, help_text in (("forecast", "run backends and write prediction files"), ("eval", "decode and score predictions")):
        p = common(sub.add_parser(name, help=help_text))
        p.add_argument("--scenario")
        p.add_argument("--backend")
        p.add_argument("--split", choices=SPLITS, default="test")
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if args.out is not None:
        config = replace(config, output_dir=args.out.resolve())
    if args.seed is not None:
        config = replace(config, seeds=[args.seed])
    return config


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _apply_overrides(load_config(args.config), args)
        if getattr(args, "backend", None) is not None:
            config.backend(args.backend)
        if args.command == "build":
            result = cmd_build(config, args.scenario)
        elif args.command == "prompt":
            result = cmd_prompt(config, args.scenario, args.split)
        elif args.command == "assemble-zero-shot":
            result = str(cmd_assemble_zero_shot(config))
        elif args.command == "forecast":
            result = [str(p) for p in cmd_forecast(config, args.backend, args.split, args.scenario)]
        else:
            result = str(cmd_eval(config, args.backend, args.split, args.scenario))
            print((config.reports_dir / f"{config.protocol.kind}_{args.split}.txt").read_text(encoding="utf-8"), end="")
            return 0
    except (EvaluationError, ServiceUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, IngestError, DatasetError, TemplateError, PromptError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
