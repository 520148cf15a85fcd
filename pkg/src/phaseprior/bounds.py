"""Empirical bi-Lipschitz constants, reconstruction error bounds and the bias interval.

Constants are estimates over a declared sampling domain, never certified
bounds; every report carries the domain and the number of sampled pairs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .errors import EstimationError, ParameterError, ParseError
from .generative import GenerativeModel
from .measurement import MeasurementOperator
from .numerics import align_phase, complex_normal, derive_seed

logger = logging.getLogger(__name__)

DEGENERATE_PAIR_TOL = 1e-12

PairSampler = Callable[[np.random.Generator], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, slots=True)
class LipschitzEstimate:
    upper: float
    lower: float
    num_pairs: int
    seed: int
    domain: str

    def __post_init__(self) -> None:
        if not (0 < self.lower <= self.upper):
            raise ParameterError(f"invalid estimate: lower={self.lower}, upper={self.upper}")

    @property
    def folded(self) -> float:
        """Single constant c >= 1 with c^-1 |u-v| <= |M(u)-M(v)| <= c |u-v| on the sample."""
        return max(self.upper, 1.0 / self.lower)


def estimate_bilipschitz(
    mapping: Callable[[np.ndarray], np.ndarray],
    sampler: PairSampler,
    num_pairs: int,
    seed: int = 0,
    domain: str = "unspecified",
) -> LipschitzEstimate:
    """Extreme ratios ||M(u) - M(v)|| / ||u - v|| over seeded pairs.

    Pair ``i`` is drawn from a generator seeded by (seed, i), so a longer run
    extends a shorter one with the same seed.
    """
    if num_pairs < 2:
        raise ParameterError("num_pairs must be at least 2")
    upper = -math.inf
    lower = math.inf
    used = 0
    for index in range(num_pairs):
        rng = np.random.default_rng(derive_seed(seed, index))
        u, v = sampler(rng)
        gap = float(np.linalg.norm(np.asarray(u) - np.asarray(v)))
        if gap <= DEGENERATE_PAIR_TOL:
            continue
        ratio = float(np.linalg.norm(np.asarray(mapping(u)) - np.asarray(mapping(v)))) / gap
        upper = max(upper, ratio)
        lower = min(lower, ratio)
        used += 1
    if used == 0 or lower <= 0:
        raise EstimationError(f"no usable pairs among {num_pairs} samples on domain {domain!r}")
    logger.debug("Lipschitz estimate on %s: lower=%.6g upper=%.6g (%d pairs)", domain, lower, upper, used)
    return LipschitzEstimate(upper=upper, lower=lower, num_pairs=num_pairs, seed=seed, domain=domain)


def signal_pair_sampler(model: GenerativeModel, perturbation: float = 0.1) -> PairSampler:
    """Pairs of generated signals, each offset by complex Gaussian noise of the given scale."""

    def _sample(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        u = model.generate(model.sample_latent(rng)) + complex_normal(rng, model.n, perturbation)
        v = model.generate(model.sample_latent(rng)) + complex_normal(rng, model.n, perturbation)
        return u, v

    return _sample


def latent_pair_sampler(model: GenerativeModel) -> PairSampler:
    def _sample(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return model.sample_latent(rng), model.sample_latent(rng)

    return _sample


@dataclass(slots=True)
class ModelConstants:
    """The three estimates used by the bounds: A, G and A o G."""

    alpha: LipschitzEstimate
    beta: LipschitzEstimate
    gamma: LipschitzEstimate


def estimate_constants(
    operator: MeasurementOperator,
    model: GenerativeModel,
    num_pairs: int,
    seed: int = 0,
    perturbation: float = 0.1,
) -> ModelConstants:
    alpha = estimate_bilipschitz(
        operator.forward,
        signal_pair_sampler(model, perturbation),
        num_pairs,
        seed=derive_seed(seed, 0),
        domain=f"A on generated signals + N(0,{perturbation:g}^2) perturbations",
    )
    beta = estimate_bilipschitz(
        model.generate,
        latent_pair_sampler(model),
        num_pairs,
        seed=derive_seed(seed, 1),
        domain="G on sampled latents",
    )
    gamma = estimate_bilipschitz(
        lambda z: operator.forward(model.generate(z)),
        latent_pair_sampler(model),
        num_pairs,
        seed=derive_seed(seed, 2),
        domain="A o G on sampled latents",
    )
    return ModelConstants(alpha=alpha, beta=beta, gamma=gamma)


def _require_constant(name: str, value: float) -> None:
    if not value >= 1:
        raise ParameterError(f"{name} must be >= 1, got {value}")


def _require_nonnegative(name: str, value: float) -> None:
    if not value >= 0:
        raise ParameterError(f"{name} must be >= 0, got {value}")


def lemma1_bound(alpha: float, eps_norm: float) -> float:
    """Conventional reconstruction error bound 2 alpha ||eps||."""
    _require_constant("alpha", alpha)
    _require_nonnegative("eps_norm", eps_norm)
    return 2.0 * alpha * eps_norm


def lemma2_bound(alpha: float, beta: float, gamma: float, bias: float, eps_norm: float) -> float:
    """Generative reconstruction error bound (1 + 2 alpha beta gamma) bias + 2 beta gamma ||eps||."""
    for name, value in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        _require_constant(name, value)
    _require_nonnegative("bias", bias)
    _require_nonnegative("eps_norm", eps_norm)
    return (1.0 + 2.0 * alpha * beta * gamma) * bias + 2.0 * beta * gamma * eps_norm


def lemma3_bound(lam: float, alpha: float, bias: float, eps_norm: float) -> float:
    """Combined reconstruction error bound lam alpha bias + 2 alpha ||eps||."""
    _require_nonnegative("lam", lam)
    _require_constant("alpha", alpha)
    _require_nonnegative("bias", bias)
    _require_nonnegative("eps_norm", eps_norm)
    return lam * alpha * bias + 2.0 * alpha * eps_norm


def bias_interval(alpha: float, residual: float, sigma: float) -> tuple[float, float]:
    """Bracket on ||G(z~) - f0|| from the residual and the noise norm; lower end clamped at 0."""
    _require_constant("alpha", alpha)
    _require_nonnegative("residual", residual)
    _require_nonnegative("sigma", sigma)
    return max(0.0, (residual - sigma) / alpha), alpha * (residual + sigma)


def detect_bias(interval: tuple[float, float], tolerance: float = 0.0) -> bool:
    """True when the residual cannot be explained by noise alone."""
    return interval[0] > tolerance


@dataclass(slots=True)
class BoundReport:
    lemma1: float
    lemma2: float
    lemma3: float
    bias_lo: float
    bias_hi: float
    alpha: float
    beta: float
    gamma: float
    lam: float
    bias: float
    eps_norm: float
    residual: float
    sigma: float
    bias_detected: bool = False
    bias_source: str = "truth"
    alpha_upper: float = math.nan
    alpha_lower: float = math.nan
    beta_upper: float = math.nan
    beta_lower: float = math.nan
    gamma_upper: float = math.nan
    gamma_lower: float = math.nan
    num_pairs: int = 0
    constant_convention: str = "folded"
    alpha_domain: str = ""
    beta_domain: str = ""
    gamma_domain: str = ""
    error: float = math.nan
    noise_std: float = math.nan
    extras: dict[str, str] = field(default_factory=dict)

    @property
    def bias_interval(self) -> tuple[float, float]:
        return self.bias_lo, self.bias_hi

    def to_text(self) -> str:
        lines = []
        for item in fields(self):
            if item.name == "extras":
                continue
            value = getattr(self, item.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = f"{value:.17g}"
            else:
                text = str(value)
            lines.append(f"{item.name} {text}")
        lines.extend(f"{key} {value}" for key, value in self.extras.items())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, path: Path | str | None = None) -> "BoundReport":
        types = {item.name: item.type for item in fields(cls) if item.name != "extras"}
        values: dict[str, object] = {}
        extras: dict[str, str] = {}
        for row, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            name, _, raw = line.partition(" ")
            raw = raw.strip()
            if name not in types:
                extras[name] = raw
                continue
            kind = types[name]
            try:
                if kind == "bool":
                    values[name] = raw == "true"
                elif kind == "int":
                    values[name] = int(raw)
                elif kind == "float":
                    values[name] = float(raw)
                else:
                    values[name] = raw
            except ValueError as exc:
                raise ParseError(f"invalid value for {name}: {raw!r}", path=path, row=row) from exc
        try:
            return cls(**values, extras=extras)  # type: ignore[arg-type]
        except TypeError as exc:
            raise ParseError(f"incomplete bound report: {exc}", path=path) from exc

    def save(self, path: Path | str) -> Path:
        target = Path(path)
        target.write_text(self.to_text(), encoding="utf-8")
        logger.info("Wrote bound report to %s", target)
        return target

    @classmethod
    def load(cls, path: Path | str) -> "BoundReport":
        source = Path(path)
        return cls.from_text(source.read_text(encoding="utf-8"), path=source)

    def as_dict(self) -> dict[str, object]:
        return asdict(self)


def build_report(
    constants: ModelConstants,
    *,
    lam: float,
    residual: float,
    eps_norm: float,
    bias: float | None = None,
    error: float = math.nan,
    noise_std: float = math.nan,
) -> BoundReport:
    """Evaluate every bound from estimated constants.

    When ``bias`` is unknown the upper end of the bias interval stands in for
    it, which over-estimates the true out-of-range distance.
    """
    alpha = constants.alpha.folded
    beta = constants.beta.folded
    gamma = constants.gamma.folded
    lo, hi = bias_interval(alpha, residual, eps_norm)
    source = "truth"
    if bias is None:
        bias, source = hi, "interval_upper"
    return BoundReport(
        lemma1=lemma1_bound(alpha, eps_norm),
        lemma2=lemma2_bound(alpha, beta, gamma, bias, eps_norm),
        lemma3=lemma3_bound(lam, alpha, bias, eps_norm),
        bias_lo=lo,
        bias_hi=hi,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        lam=lam,
        bias=bias,
        eps_norm=eps_norm,
        residual=residual,
        sigma=eps_norm,
        bias_detected=detect_bias((lo, hi)),
        bias_source=source,
        alpha_upper=constants.alpha.upper,
        alpha_lower=constants.alpha.lower,
        beta_upper=constants.beta.upper,
        beta_lower=constants.beta.lower,
        gamma_upper=constants.gamma.upper,
        gamma_lower=constants.gamma.lower,
        num_pairs=constants.alpha.num_pairs,
        alpha_domain=constants.alpha.domain,
        beta_domain=constants.beta.domain,
        gamma_domain=constants.gamma.domain,
        error=error,
        noise_std=noise_std,
    )


def assess_reconstruction(
    operator: MeasurementOperator,
    model: GenerativeModel,
    *,
    lam: float,
    residual: float,
    eps_norm: float,
    truth: ArrayLike | None = None,
    reconstruction: ArrayLike | None = None,
    num_pairs: int = 2000,
    seed: int = 0,
    noise_std: float = math.nan,
) -> BoundReport:
    """Estimate the constants on the model's domains and evaluate every bound."""
    constants = estimate_constants(operator, model, num_pairs, seed=seed)
    bias = model.bias_of(truth) if truth is not None else None
    error = math.nan
    if truth is not None and reconstruction is not None:
        error = float(np.linalg.norm(align_phase(reconstruction, truth) - np.asarray(truth)))
    return build_report(
        constants,
        lam=lam,
        residual=residual,
        eps_norm=eps_norm,
        bias=bias,
        error=error,
        noise_std=noise_std,
    )
