"""Sweep configuration files: flat ``key = value`` text or an equivalent YAML mapping."""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Callable, Dict

import yaml

from ..errors import ConfigError
from ..measurement import ProbeAlphabet
from ..optimize import FormulationKind
from .sweep import ExperimentConfig, LambdaRule, Scenario

YAML_SUFFIXES = (".yaml", ".yml")
LIST_KEYS = ("sigma_grid", "scenarios", "methods")
PATH_KEYS = ("dataset", "model", "output_csv", "output_plot")


def _integer(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"expected an integer, got {value!r}")
    return value


def _real(value: Any) -> float:
    if isinstance(value, str):
        return float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _optional_integer(value: Any) -> int | None:
    return None if value is None else _integer(value)


def _enum_list(kind: type) -> Callable[[Any], tuple]:
    def _parse(values: Any) -> tuple:
        return tuple(kind(str(item)) for item in values)

    return _parse


_COERCERS: Dict[str, Callable[[Any], Any]] = {
    "n": _integer,
    "k": _integer,
    "num_probes": _integer,
    "sigma_grid": lambda values: tuple(_real(item) for item in values),
    "trials": _integer,
    "scenarios": _enum_list(Scenario),
    "methods": _enum_list(FormulationKind),
    "seed": _integer,
    "probe_seed": _optional_integer,
    "probe_alphabet": lambda value: ProbeAlphabet(str(value)),
    "lambda_rule": lambda value: LambdaRule(str(value)),
    "lambda_scale": _real,
    "holdout_fraction": _real,
    "memory": _integer,
    "grad_tol": _real,
    "max_iter": _integer,
    "restarts": _integer,
    "init_scale": _real,
    "workers": _integer,
}

KNOWN_KEYS = frozenset(field.name for field in dataclasses.fields(ExperimentConfig))


def _scalar(text: str) -> Any:
    # PyYAML resolves 1e-3 as a string (it wants a dot), so numbers get a second chance
    value = yaml.safe_load(text) if text else None
    if isinstance(value, str):
        try:
            return float(value) if any(ch in value for ch in ".eE") else int(value)
        except ValueError:
            return value
    return value


def parse_key_values(text: str, source: Path | str = "<config>") -> dict[str, Any]:
    raw: dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value'")
        if key in raw:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        if key in LIST_KEYS:
            raw[key] = [_scalar(item.strip()) for item in value.split(",") if item.strip()]
        else:
            raw[key] = _scalar(value)
    return raw


def build_experiment_config(raw: dict[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """Type-check a flat mapping and build the config; relative paths resolve against ``base_dir``."""
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
    values: dict[str, Any] = {}
    for key, value in raw.items():
        if key in PATH_KEYS:
            if value is None or value == "":
                values[key] = None
                continue
            path = Path(str(value)).expanduser()
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            values[key] = path
            continue
        if key in LIST_KEYS:
            if isinstance(value, str):
                value = [_scalar(item.strip()) for item in value.split(",") if item.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
        try:
            values[key] = _COERCERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid value for {key!r}: {exc}") from exc
    return ExperimentConfig(**values)


def load_experiment_config(path: Path | str) -> ExperimentConfig:
    source = Path(path)
    if not source.exists():
        raise ConfigError(f"Experiment configuration file not found: {source}")
    text = source.read_text(encoding="utf-8")
    if source.suffix.lower() in YAML_SUFFIXES:
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: expected a flat mapping at the top level")
    else:
        raw = parse_key_values(text, source)
    return build_experiment_config({str(key): value for key, value in raw.items()}, source.parent)
