"""YAML files exchanged by the ``simulate``, ``reconstruct`` and ``bounds`` commands.

Complex vectors are stored as lists of ``[re, im]`` pairs so the files stay plain YAML.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from numpy.typing import ArrayLike

from ..errors import ParseError
from ..numerics import ComplexVector, RealVector, as_complex_vector, as_real_vector
from ..optimize import FormulationKind, ReconstructionResult

MEASUREMENT_KIND = "measurement"
RECONSTRUCTION_KIND = "reconstruction"


def _encode_complex(vector: ArrayLike) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(vector, dtype=np.complex128)]


def _decode_complex(values: Any, name: str, source: Path) -> ComplexVector:
    try:
        pairs = np.asarray(values, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("expected a list of [re, im] pairs")
        return as_complex_vector(pairs[:, 0] + 1j * pairs[:, 1], name)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name!r}: {exc}", path=source) from exc


def _decode_real(values: Any, name: str, source: Path) -> RealVector:
    try:
        return as_real_vector(np.asarray(values, dtype=np.float64), name)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name!r}: {exc}", path=source) from exc


def _read_document(path: Path | str, kind: str) -> tuple[dict[str, Any], Path]:
    source = Path(path)
    try:
        raw = yaml.safe_load(source.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}", path=source) from exc
    if not isinstance(raw, dict) or raw.get("kind") != kind:
        raise ParseError(f"not a {kind} file", path=source)
    return raw, source


def _write_document(document: dict[str, Any], path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
    return target


def _require(raw: dict[str, Any], key: str, source: Path) -> Any:
    if key not in raw:
        raise ParseError(f"missing field {key!r}", path=source)
    return raw[key]


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    y: RealVector
    sigma: float
    eps_norm: float
    noise_seed: int
    truth: ComplexVector | None = None

    def save(self, path: Path | str) -> Path:
        document: dict[str, Any] = {
            "kind": MEASUREMENT_KIND,
            "sigma": float(self.sigma),
            "eps_norm": float(self.eps_norm),
            "noise_seed": int(self.noise_seed),
            "y": [float(v) for v in self.y],
        }
        if self.truth is not None:
            document["truth"] = _encode_complex(self.truth)
        return _write_document(document, path)

    @classmethod
    def load(cls, path: Path | str) -> "MeasurementRecord":
        raw, source = _read_document(path, MEASUREMENT_KIND)
        truth = raw.get("truth")
        try:
            sigma = float(_require(raw, "sigma", source))
            eps_norm = float(raw.get("eps_norm", math.nan))
            noise_seed = int(raw.get("noise_seed", 0))
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), path=source) from exc
        return cls(
            y=_decode_real(_require(raw, "y", source), "y", source),
            sigma=sigma,
            eps_norm=eps_norm,
            noise_seed=noise_seed,
            truth=None if truth is None else _decode_complex(truth, "truth", source),
        )


@dataclass(frozen=True, eq=False)
class ReconstructionRecord:
    method: FormulationKind
    lam: float
    x: ComplexVector
    f: ComplexVector
    objective_value: float
    residual: float
    iterations: int
    converged: bool
    restart_index: int = 0

    @classmethod
    def from_result(cls, method: FormulationKind, lam: float, result: ReconstructionResult) -> "ReconstructionRecord":
        return cls(
            method=FormulationKind(method),
            lam=float(lam),
            x=result.x,
            f=result.f,
            objective_value=result.objective_value,
            residual=result.residual,
            iterations=result.iterations,
            converged=result.converged,
            restart_index=result.restart_index,
        )

    def save(self, path: Path | str) -> Path:
        return _write_document(
            {
                "kind": RECONSTRUCTION_KIND,
                "method": self.method.value,
                "lam": float(self.lam),
                "objective_value": float(self.objective_value),
                "residual": float(self.residual),
                "iterations": int(self.iterations),
                "converged": bool(self.converged),
                "restart_index": int(self.restart_index),
                "x": _encode_complex(self.x),
                "f": _encode_complex(self.f),
            },
            path,
        )

    @classmethod
    def load(cls, path: Path | str) -> "ReconstructionRecord":
        raw, source = _read_document(path, RECONSTRUCTION_KIND)
        try:
            method = FormulationKind(_require(raw, "method", source))
            lam = float(_require(raw, "lam", source))
            objective_value = float(raw.get("objective_value", math.nan))
            residual = float(_require(raw, "residual", source))
            iterations = int(raw.get("iterations", 0))
            restart_index = int(raw.get("restart_index", 0))
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), path=source) from exc
        return cls(
            method=method,
            lam=lam,
            x=_decode_complex(_require(raw, "x", source), "x", source),
            f=_decode_complex(_require(raw, "f", source), "f", source),
            objective_value=objective_value,
            residual=residual,
            iterations=iterations,
            converged=bool(raw.get("converged", False)),
            restart_index=restart_index,
        )
