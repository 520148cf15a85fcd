from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, TypeVar

from dotenv import dotenv_values

from .errors import ConfigError
from .optimize import SolverConfig

T = TypeVar("T")

_SOLVER_DEFAULTS = SolverConfig()


def _load_env(env_file: Path | str | None) -> dict[str, str]:
    """Variables from a .env file (default: ./.env) overlaid by the real environment."""
    path = Path(env_file) if env_file is not None else Path.cwd() / ".env"
    if env_file is not None and not path.is_file():
        raise ConfigError(f"env file not found: {path}")
    values: dict[str, str] = {}
    if path.is_file():
        values = {key: value for key, value in dotenv_values(path).items() if value is not None}
    values.update(os.environ)
    return values


def _env_value(env: Mapping[str, str], name: str, parse: Callable[[str], T], default: T) -> T:
    raw = env.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return parse(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"Invalid value for environment variable {name}: {raw!r}") from exc


def _env_path(env: Mapping[str, str], name: str) -> Path | None:
    value = env.get(name)
    if value:
        return Path(value).expanduser()
    return None


@dataclass(slots=True)
class Settings:
    """Process-level configuration loaded from env, with a .env file as fallback."""

    log_level: str = "WARNING"
    log_file: Path | None = None
    workers: int = 1

    # Solver defaults, overridable per run
    memory: int = _SOLVER_DEFAULTS.memory
    grad_tol: float = _SOLVER_DEFAULTS.grad_tol
    max_iter: int = _SOLVER_DEFAULTS.max_iter
    restarts: int = _SOLVER_DEFAULTS.restarts
    init_scale: float = _SOLVER_DEFAULTS.init_scale

    @classmethod
    def from_env(cls, env_file: Path | str | None = None) -> "Settings":
        env = _load_env(env_file)
        settings = cls(
            log_level=_env_value(env, "PHASEPRIOR_LOG_LEVEL", str.upper, "WARNING"),
            log_file=_env_path(env, "PHASEPRIOR_LOG_FILE"),
            workers=_env_value(env, "PHASEPRIOR_WORKERS", int, 1),
            memory=_env_value(env, "PHASEPRIOR_LBFGS_MEMORY", int, _SOLVER_DEFAULTS.memory),
            grad_tol=_env_value(env, "PHASEPRIOR_GRAD_TOL", float, _SOLVER_DEFAULTS.grad_tol),
            max_iter=_env_value(env, "PHASEPRIOR_MAX_ITER", int, _SOLVER_DEFAULTS.max_iter),
            restarts=_env_value(env, "PHASEPRIOR_RESTARTS", int, _SOLVER_DEFAULTS.restarts),
            init_scale=_env_value(env, "PHASEPRIOR_INIT_SCALE", float, _SOLVER_DEFAULTS.init_scale),
        )
        # surfaces range errors early, naming the settings rather than the solver
        try:
            settings.solver_config()
        except ValueError as exc:
            raise ConfigError(f"Invalid solver settings in environment: {exc}") from exc
        return settings

    def solver_config(self, seed: int = 0, **overrides: object) -> SolverConfig:
        values: dict[str, object] = {
            "memory": self.memory,
            "grad_tol": self.grad_tol,
            "max_iter": self.max_iter,
            "restarts": self.restarts,
            "init_scale": self.init_scale,
            "workers": self.workers,
            "seed": seed,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return SolverConfig(**values)  # type: ignore[arg-type]
