"""Unified reconstruction problem and its limited-memory quasi-Newton solver.

Every formulation is an instance of

    min_x ||A(B(x)) - y||^2 + lam^2 ||w * x||^2

with B the identity (conventional), the generative model (generative) or
B(x1, x2) = G(x1) + x2 (combined). Optimisation runs over the real-stacked
vector of length 2d, since the objective is not holomorphic.
"""

from __future__ import annotations

import enum
import logging
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Deque, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import line_search

from .errors import DimensionError, NumericalError, ParameterError
from .generative import GenerativeModel
from .measurement import MeasurementOperator
from .numerics import (
    ComplexVector,
    RealVector,
    as_complex_vector,
    as_real_vector,
    complex_normal,
    derive_seed,
    real_stack,
    real_unstack,
    require_length,
)

logger = logging.getLogger(__name__)

CURVATURE_TOL = 1e-10

ObjectiveFn = Callable[[RealVector], Tuple[float, RealVector]]


class FormulationKind(str, enum.Enum):
    CONVENTIONAL = "conventional"
    GENERATIVE = "generative"
    COMBINED = "combined"


def default_weights(kind: FormulationKind | str, k: int, n: int) -> RealVector:
    """Combined: zeros on the latent block, ones on the signal block; otherwise all ones."""
    kind = FormulationKind(kind)
    if kind is FormulationKind.CONVENTIONAL:
        return np.ones(n)
    if kind is FormulationKind.GENERATIVE:
        return np.ones(k)
    return np.concatenate([np.zeros(k), np.ones(n)])


@dataclass(frozen=True, eq=False)
class Formulation:
    kind: FormulationKind
    n: int
    model: GenerativeModel | None = None
    lam: float = 0.0
    weights: RealVector | None = None

    def __post_init__(self) -> None:
        kind = FormulationKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is not FormulationKind.CONVENTIONAL:
            if self.model is None:
                raise ParameterError(f"{kind.value} formulation requires a generative model")
            if self.model.n != self.n:
                raise DimensionError(f"model dimension {self.model.n} does not match n={self.n}")
        if self.n < 1:
            raise ParameterError("signal dimension must be positive")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ParameterError(f"lam must be a non-negative real, got {self.lam}")
        k = self.model.k if self.model is not None else 0
        if self.weights is None:
            weights = default_weights(kind, k, self.n)
        else:
            weights = as_real_vector(self.weights, "weights")
        require_length(weights, self.d, "weights")
        if np.any(weights < 0):
            raise ParameterError("weights must be non-negative")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def create(
        cls,
        kind: FormulationKind | str,
        *,
        n: int | None = None,
        model: GenerativeModel | None = None,
        lam: float = 0.0,
        weights: ArrayLike | None = None,
    ) -> "Formulation":
        if n is None:
            if model is None:
                raise ParameterError("either n or a model is required")
            n = model.n
        return cls(
            kind=FormulationKind(kind),
            n=n,
            model=model,
            lam=float(lam),
            weights=None if weights is None else np.asarray(weights, dtype=np.float64),
        )

    @property
    def d(self) -> int:
        if self.kind is FormulationKind.CONVENTIONAL:
            return self.n
        assert self.model is not None
        if self.kind is FormulationKind.GENERATIVE:
            return self.model.k
        return self.model.k + self.n

    @property
    def variable_scale(self) -> RealVector:
        """Per-entry factor of the solver's change of variables x = scale * u.

        Entries penalised with lam * w > 1 are shrunk by that product, so the
        penalty contributes unit curvature in u whatever the size of lam.
        """
        return 1.0 / np.maximum(1.0, self.lam * self.weights)

    def split(self, x: ComplexVector) -> tuple[ComplexVector, ComplexVector]:
        """(x1, x2) blocks of a combined variable."""
        if self.kind is not FormulationKind.COMBINED:
            raise ParameterError("only the combined formulation has two blocks")
        assert self.model is not None
        return x[: self.model.k], x[self.model.k :]

    def apply_B(self, x: ArrayLike) -> ComplexVector:
        vec = as_complex_vector(x, "variable")
        require_length(vec, self.d, "variable")
        if self.kind is FormulationKind.CONVENTIONAL:
            return vec.copy()
        assert self.model is not None
        if self.kind is FormulationKind.GENERATIVE:
            return self.model.generate(vec)
        latent, offset = self.split(vec)
        return self.model.generate(latent) + offset

    def pullback(self, gradient: ComplexVector) -> ComplexVector:
        """Chain rule through B for a complex-form signal gradient."""
        if self.kind is FormulationKind.CONVENTIONAL:
            return gradient
        assert self.model is not None
        latent_grad = self.model.pullback(gradient)
        if self.kind is FormulationKind.GENERATIVE:
            return latent_grad
        return np.concatenate([latent_grad, gradient])


def apply_B(form: Formulation, x: ArrayLike) -> ComplexVector:
    return form.apply_B(x)


@dataclass(frozen=True, eq=False)
class UnifiedProblem:
    formulation: Formulation
    operator: MeasurementOperator
    y: RealVector

    def __post_init__(self) -> None:
        if self.operator.n != self.formulation.n:
            raise DimensionError(
                f"operator dimension {self.operator.n} does not match formulation n={self.formulation.n}"
            )
        data = as_real_vector(self.y, "intensities")
        require_length(data, self.operator.m, "intensities")
        data.setflags(write=False)
        object.__setattr__(self, "y", data)

    @property
    def d(self) -> int:
        return self.formulation.d

    def evaluate(self, x: ArrayLike) -> tuple[float, RealVector]:
        """Objective value and its real-stacked gradient."""
        vec = as_complex_vector(x, "variable")
        require_length(vec, self.d, "variable")
        form = self.formulation
        signal = form.apply_B(vec)
        u = self.operator.apply(signal)
        residual = np.abs(u) ** 2 - self.y
        penalty = form.lam**2 * form.weights**2
        value = float(np.dot(residual, residual) + np.sum(penalty * np.abs(vec) ** 2))
        grad = form.pullback(4.0 * self.operator.adjoint(residual * u)) + 2.0 * penalty * vec
        return value, real_stack(grad)

    def evaluate_stacked(self, xr: RealVector) -> tuple[float, RealVector]:
        return self.evaluate(real_unstack(xr))

    def residual(self, x: ArrayLike) -> float:
        """||A(B(x)) - y||."""
        return float(np.linalg.norm(self.operator.forward(self.formulation.apply_B(x)) - self.y))


def objective(problem: UnifiedProblem, x: ArrayLike) -> tuple[float, RealVector]:
    return problem.evaluate(x)


@dataclass(frozen=True, slots=True)
class SolverConfig:
    memory: int = 10
    grad_tol: float = 1e-8
    max_iter: int = 500
    restarts: int = 5
    init_scale: float = 1.0
    seed: int = 0
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 50
    workers: int = 1
    check_descent: bool = False

    def __post_init__(self) -> None:
        for name in ("memory", "max_iter", "restarts", "max_line_search", "workers"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be a positive integer")
        for name in ("grad_tol", "init_scale"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not 0 < self.c1 < self.c2 < 1:
            raise ParameterError("line search constants must satisfy 0 < c1 < c2 < 1")


@dataclass(frozen=True, slots=True)
class LbfgsOutcome:
    x: RealVector
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str
    evaluations: int


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    x: ComplexVector
    f: ComplexVector
    objective_value: float
    residual: float
    iterations: int
    converged: bool
    restart_index: int = 0
    message: str = ""


class _EvaluationCache:
    """Remembers the last point so value and gradient requests share one evaluation."""

    def __init__(self, fun: ObjectiveFn) -> None:
        self._fun = fun
        self._x: RealVector | None = None
        self._value = 0.0
        self._grad: RealVector | None = None
        self.evaluations = 0

    def __call__(self, x: RealVector) -> tuple[float, RealVector]:
        if self._x is None or not np.array_equal(x, self._x):
            with np.errstate(over="ignore", invalid="ignore"):
                value, grad = self._fun(x)
            self.evaluations += 1
            self._x = np.array(x, copy=True)
            self._value = float(value) if np.isfinite(value) else np.inf
            self._grad = np.asarray(grad, dtype=np.float64)
        assert self._grad is not None
        return self._value, self._grad

    def value(self, x: RealVector) -> float:
        return self(x)[0]

    def gradient(self, x: RealVector) -> RealVector:
        return self(x)[1]


def _two_loop(grad: RealVector, s_hist: Deque[RealVector], y_hist: Deque[RealVector]) -> RealVector:
    q = -grad
    if not s_hist:
        return q / max(1.0, float(np.linalg.norm(grad)))
    alphas = []
    for s, yv in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(np.dot(yv, s))
        alpha = rho * float(np.dot(s, q))
        q = q - alpha * yv
        alphas.append((rho, alpha))
    s_last, y_last = s_hist[-1], y_hist[-1]
    q = q * (float(np.dot(s_last, y_last)) / float(np.dot(y_last, y_last)))
    for (s, yv), (rho, alpha) in zip(zip(s_hist, y_hist), reversed(alphas)):
        beta = rho * float(np.dot(yv, q))
        q = q + (alpha - beta) * s
    return q


def _backtrack(
    cache: _EvaluationCache,
    x: RealVector,
    value: float,
    slope: float,
    direction: RealVector,
    config: SolverConfig,
) -> float | None:
    """Armijo bisection used when the strong Wolfe search gives up."""
    step = 1.0
    for _ in range(config.max_line_search):
        trial = cache.value(x + step * direction)
        if np.isfinite(trial) and trial <= value + config.c1 * step * slope:
            return step
        step *= 0.5
    return None


def _search(
    cache: _EvaluationCache,
    x: RealVector,
    value: float,
    grad: RealVector,
    direction: RealVector,
    config: SolverConfig,
) -> float | None:
    slope = float(np.dot(grad, direction))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        step = line_search(
            cache.value,
            cache.gradient,
            x,
            direction,
            gfk=grad,
            old_fval=value,
            c1=config.c1,
            c2=config.c2,
            maxiter=config.max_line_search,
        )[0]
    if step is not None and np.isfinite(step) and step > 0:
        trial = cache.value(x + step * direction)
        if np.isfinite(trial) and trial <= value:
            return float(step)
    logger.debug("Strong Wolfe search failed; falling back to bisection")
    return _backtrack(cache, x, value, slope, direction, config)


def lbfgs(fun: ObjectiveFn, x0: ArrayLike, config: SolverConfig = SolverConfig()) -> LbfgsOutcome:
    """Minimise a smooth real function of a real vector.

    Stops when ||grad|| <= grad_tol * max(1, |value|) (converged) or after
    ``max_iter`` iterations. A line search that fails even after memory reset
    ends the run with the best iterate and ``converged=False``.
    """
    cache = _EvaluationCache(fun)
    x = np.array(x0, dtype=np.float64, copy=True)
    value, grad = cache(x)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericalError("objective or gradient is not finite at the initial point")

    s_hist: Deque[RealVector] = deque(maxlen=config.memory)
    y_hist: Deque[RealVector] = deque(maxlen=config.memory)
    iterations = 0

    while True:
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.grad_tol * max(1.0, abs(value)):
            return LbfgsOutcome(x, value, grad_norm, iterations, True, "gradient tolerance reached", cache.evaluations)
        if iterations >= config.max_iter:
            return LbfgsOutcome(x, value, grad_norm, iterations, False, "iteration limit reached", cache.evaluations)

        direction = _two_loop(grad, s_hist, y_hist)
        if float(np.dot(grad, direction)) >= 0:
            s_hist.clear()
            y_hist.clear()
            direction = _two_loop(grad, s_hist, y_hist)
        step = _search(cache, x, value, grad, direction, config)
        if step is None and s_hist:
            s_hist.clear()
            y_hist.clear()
            direction = _two_loop(grad, s_hist, y_hist)
            step = _search(cache, x, value, grad, direction, config)
        if step is None:
            logger.debug("Line search failed after %d iterations (value %.6g)", iterations, value)
            return LbfgsOutcome(x, value, grad_norm, iterations, False, "line search failed", cache.evaluations)

        x_new = x + step * direction
        value_new, grad_new = cache(x_new)
        if not np.all(np.isfinite(grad_new)):
            return LbfgsOutcome(x, value, grad_norm, iterations, False, "non-finite gradient", cache.evaluations)
        if config.check_descent:
            assert value_new <= value, f"objective increased from {value!r} to {value_new!r}"

        s = x_new - x
        yv = grad_new - grad
        if float(np.dot(s, yv)) > CURVATURE_TOL * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            s_hist.append(s)
            y_hist.append(yv)
        x, value, grad = x_new, value_new, np.array(grad_new, copy=True)
        iterations += 1


def lbfgs_minimize(
    problem: UnifiedProblem,
    x0: ArrayLike,
    config: SolverConfig = SolverConfig(),
    restart_index: int = 0,
) -> ReconstructionResult:
    """L-BFGS from ``x0`` in the scaled variables u = x / variable_scale.

    The reported point, value and residual are in the original variables;
    ``converged`` refers to the gradient with respect to u.
    """
    start = as_complex_vector(x0, "initial point")
    require_length(start, problem.d, "initial point")
    scale = problem.formulation.variable_scale
    stacked_scale = np.concatenate([scale, scale])

    def scaled(u: RealVector) -> tuple[float, RealVector]:
        value, grad = problem.evaluate_stacked(stacked_scale * u)
        return value, stacked_scale * grad

    outcome = lbfgs(scaled, real_stack(start) / stacked_scale, config)
    x = real_unstack(stacked_scale * outcome.x)
    logger.debug(
        "restart %d: %s after %d iterations, objective %.6g",
        restart_index,
        outcome.message,
        outcome.iterations,
        outcome.value,
    )
    return ReconstructionResult(
        x=x,
        f=problem.formulation.apply_B(x),
        objective_value=outcome.value,
        residual=problem.residual(x),
        iterations=outcome.iterations,
        converged=outcome.converged,
        restart_index=restart_index,
        message=outcome.message,
    )


def initial_point(
    d: int,
    config: SolverConfig,
    restart_index: int,
    scale: ArrayLike | None = None,
) -> ComplexVector:
    """Seeded complex Gaussian start for one restart, optionally multiplied entrywise by ``scale``."""
    rng = np.random.default_rng(derive_seed(config.seed, restart_index))
    point = complex_normal(rng, d, config.init_scale)
    return point if scale is None else point * np.asarray(scale, dtype=np.float64)


def _run_restart(problem: UnifiedProblem, config: SolverConfig, index: int) -> ReconstructionResult | None:
    start = initial_point(problem.d, config, index, problem.formulation.variable_scale)
    try:
        return lbfgs_minimize(problem, start, config, index)
    except NumericalError as exc:
        logger.warning("restart %d failed: %s", index, exc)
        return None


def reconstruct(problem: UnifiedProblem, config: SolverConfig = SolverConfig()) -> ReconstructionResult:
    """Best-of-``restarts`` reconstruction; ties go to the lowest restart index."""
    indices = range(config.restarts)
    if config.workers > 1 and config.restarts > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda i: _run_restart(problem, config, i), indices))
    else:
        results = [_run_restart(problem, config, i) for i in indices]

    best: ReconstructionResult | None = None
    for result in results:
        if result is not None and (best is None or result.objective_value < best.objective_value):
            best = result
    if best is None:
        raise NumericalError("every restart failed")
    logger.info(
        "%s reconstruction: objective %.6g from restart %d (%d iterations, converged=%s)",
        problem.formulation.kind.value,
        best.objective_value,
        best.restart_index,
        best.iterations,
        best.converged,
    )
    return best
