"""Signal-to-noise sweep over formulations and ground-truth scenarios."""

from __future__ import annotations

import csv
import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ConfigError, DimensionError, NumericalError, ParseError
from ..generative import GenerativeModel, train_pca
from ..measurement import MeasurementOperator, ProbeAlphabet, make_probes
from ..numerics import ComplexVector, derive_seed
from ..optimize import Formulation, FormulationKind, SolverConfig, UnifiedProblem, reconstruct
from .datasets import complexify, split_holdout
from .metrics import add_noise, relative_error, snr_db

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "sigma",
    "snr_db",
    "method",
    "scenario",
    "trial",
    "relative_error",
    "residual",
    "iterations",
    "converged",
)

DEFAULT_SIGMA_GRID = tuple(float(s) for s in np.logspace(-4, 0, 8))


class Scenario(str, enum.Enum):
    IN_DISTRIBUTION = "in_distribution"
    OUT_OF_DISTRIBUTION = "out_of_distribution"


class LambdaRule(str, enum.Enum):
    PAPER = "paper"
    NOISE_NORM = "noise_norm"
    NONE = "none"


class SeedStream(enum.IntEnum):
    """Tags passed to derive_seed next to the master seed; each names one random stream."""

    LATENT = 1
    HOLDOUT = 2
    NOISE = 3
    SOLVER = 4
    PAIRING = 5
    SPLIT = 6
    GALLERY = 7


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 64
    k: int = 30
    num_probes: int = 100
    sigma_grid: tuple[float, ...] = DEFAULT_SIGMA_GRID
    trials: int = 10
    scenarios: tuple[Scenario, ...] = (Scenario.IN_DISTRIBUTION, Scenario.OUT_OF_DISTRIBUTION)
    methods: tuple[FormulationKind, ...] = (
        FormulationKind.CONVENTIONAL,
        FormulationKind.GENERATIVE,
        FormulationKind.COMBINED,
    )
    seed: int = 0
    probe_seed: int | None = None
    probe_alphabet: ProbeAlphabet = ProbeAlphabet.BINARY
    lambda_rule: LambdaRule = LambdaRule.PAPER
    lambda_scale: float = 1.0
    holdout_fraction: float = 0.2
    memory: int = 10
    grad_tol: float = 1e-8
    max_iter: int = 500
    restarts: int = 5
    init_scale: float = 1.0
    workers: int = 1
    dataset: Path | None = None
    model: Path | None = None
    output_csv: Path | None = None
    output_plot: Path | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1 or self.num_probes < 1:
            raise ConfigError("n, k and num_probes must be positive")
        if self.k >= self.n:
            raise ConfigError(f"k={self.k} must be smaller than n={self.n}")
        if not self.sigma_grid:
            raise ConfigError("sigma_grid must not be empty")
        if any(not math.isfinite(s) or s < 0 for s in self.sigma_grid):
            raise ConfigError("sigma_grid values must be finite and non-negative")
        if any(b < a for a, b in zip(self.sigma_grid, self.sigma_grid[1:])):
            raise ConfigError("sigma_grid must be ascending")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.scenarios or not self.methods:
            raise ConfigError("scenarios and methods must not be empty")
        if len(set(self.scenarios)) != len(self.scenarios) or len(set(self.methods)) != len(self.methods):
            raise ConfigError("scenarios and methods must not repeat")
        if not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must lie in (0, 1)")
        if self.lambda_scale < 0:
            raise ConfigError("lambda_scale must be non-negative")
        try:
            self.solver_config(self.seed)
        except ValueError as exc:
            raise ConfigError(f"invalid solver settings: {exc}") from exc

    @property
    def m(self) -> int:
        return self.n * self.num_probes

    def solver_config(self, seed: int) -> SolverConfig:
        return SolverConfig(
            memory=self.memory,
            grad_tol=self.grad_tol,
            max_iter=self.max_iter,
            restarts=self.restarts,
            init_scale=self.init_scale,
            seed=seed,
        )

    def build_operator(self) -> MeasurementOperator:
        seed = self.seed if self.probe_seed is None else self.probe_seed
        return MeasurementOperator(make_probes(self.num_probes, self.n, seed, self.probe_alphabet))


@dataclass(frozen=True, slots=True)
class SweepRecord:
    sigma: float
    snr_db: float
    method: FormulationKind
    scenario: Scenario
    trial: int
    relative_error: float
    residual: float
    iterations: int
    converged: bool


@dataclass
class SweepResult:
    records: list[SweepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def sigmas(self) -> list[float]:
        return sorted({record.sigma for record in self.records})

    def methods(self) -> list[FormulationKind]:
        return list(dict.fromkeys(record.method for record in self.records))

    def scenarios(self) -> list[Scenario]:
        return list(dict.fromkeys(record.scenario for record in self.records))

    def select(
        self,
        *,
        sigma: float | None = None,
        method: FormulationKind | str | None = None,
        scenario: Scenario | str | None = None,
    ) -> list[SweepRecord]:
        method = FormulationKind(method) if method is not None else None
        scenario = Scenario(scenario) if scenario is not None else None
        return [
            record
            for record in self.records
            if (sigma is None or record.sigma == sigma)
            and (method is None or record.method is method)
            and (scenario is None or record.scenario is scenario)
        ]

    def mean_error(self, sigma: float, method: FormulationKind | str, scenario: Scenario | str) -> float:
        chosen = self.select(sigma=sigma, method=method, scenario=scenario)
        if not chosen:
            return math.nan
        return float(np.mean([record.relative_error for record in chosen]))

    def mean_snr_db(self, sigma: float, scenario: Scenario | str) -> float:
        chosen = self.select(sigma=sigma, scenario=scenario)
        if not chosen:
            return math.nan
        return float(np.mean([record.snr_db for record in chosen]))


def lambda_for(
    rule: LambdaRule | str,
    kind: FormulationKind,
    sigma: float,
    m: int,
    k: int,
    n: int,
    scale: float = 1.0,
) -> tuple[float, np.ndarray | None]:
    """Penalty weight and weight vector for one formulation; ``None`` weights mean the defaults."""
    rule = LambdaRule(rule)
    if rule is LambdaRule.NONE:
        return 0.0, None
    d = n if kind is FormulationKind.CONVENTIONAL else k if kind is FormulationKind.GENERATIVE else k + n
    if kind is not FormulationKind.COMBINED:
        return sigma**2, np.ones(d)
    if rule is LambdaRule.PAPER:
        return 10.0 * sigma**2, np.ones(d)
    return scale * sigma * math.sqrt(m), None


def trained_on(model: GenerativeModel, train: Sequence[ArrayLike]) -> bool:
    """True when ``model`` was fitted on exactly ``train`` (same sample count, length and mean)."""
    data = np.asarray([np.asarray(sample, dtype=np.complex128) for sample in train])
    if data.ndim != 2 or data.shape != (model.num_train, model.n):
        return False
    mean = data.T.mean(axis=1)
    tol = 1e-12 * max(1.0, float(np.abs(mean).max()))
    return bool(np.allclose(model.offset, mean, rtol=0.0, atol=tol))


def prepare_experiment(
    config: ExperimentConfig,
    images: Sequence[ArrayLike],
    model: GenerativeModel | None = None,
) -> tuple[GenerativeModel, list[ComplexVector]]:
    """Complexify real images, hold out a test split and train the model on the rest.

    A pre-trained ``model`` replaces training but must have been fitted on this
    configuration's training split, so no held-out ground truth was seen in training.
    """
    signals = complexify(images, derive_seed(config.seed, SeedStream.PAIRING))
    train, holdout = split_holdout(signals, derive_seed(config.seed, SeedStream.SPLIT), config.holdout_fraction)
    if model is None:
        model = train_pca(train, config.k)
    elif not trained_on(model, train):
        raise ConfigError(
            "model was not trained on the training split of this dataset; "
            f"retrain it with 'train --seed {config.seed} --holdout-fraction {config.holdout_fraction:g}'"
        )
    return model, [np.asarray(sample, dtype=np.complex128) for sample in holdout]


def draw_ground_truth(
    config: ExperimentConfig,
    model: GenerativeModel,
    holdout: Sequence[ArrayLike],
    scenario: Scenario | str,
    trial: int,
) -> ComplexVector:
    """Ground truth for one trial, shared by every method and noise level."""
    scenario = Scenario(scenario)
    if scenario is Scenario.IN_DISTRIBUTION:
        return model.generate(model.sample_latent(derive_seed(config.seed, SeedStream.LATENT, trial)))
    if not holdout:
        raise ConfigError("out-of-distribution trials need held-out samples")
    order = np.random.default_rng(derive_seed(config.seed, SeedStream.HOLDOUT)).permutation(len(holdout))
    return np.asarray(holdout[int(order[trial % len(holdout)])], dtype=np.complex128)


@dataclass(frozen=True, slots=True)
class _Cell:
    sigma_index: int
    method: FormulationKind
    scenario_index: int
    trial: int


def _iter_cells(config: ExperimentConfig) -> Iterable[_Cell]:
    for sigma_index in range(len(config.sigma_grid)):
        for method in config.methods:
            for scenario_index in range(len(config.scenarios)):
                for trial in range(config.trials):
                    yield _Cell(sigma_index, method, scenario_index, trial)


def run_sweep(
    config: ExperimentConfig,
    model: GenerativeModel,
    dataset: Sequence[ArrayLike],
    operator: MeasurementOperator | None = None,
) -> SweepResult:
    """Reconstruct every (sigma, method, scenario, trial) cell.

    ``dataset`` holds the out-of-distribution pool, i.e. complex samples that
    were not used to train ``model``. Output order follows the grid indices,
    never completion order, so the result is a pure function of the inputs.
    """
    if model.n != config.n or model.k != config.k:
        raise DimensionError(f"model is n={model.n}, k={model.k}; config expects n={config.n}, k={config.k}")
    holdout = [np.asarray(sample, dtype=np.complex128) for sample in dataset]
    if any(sample.shape != (config.n,) for sample in holdout):
        raise DimensionError(f"held-out samples must have length {config.n}")
    op = operator or config.build_operator()
    if op.n != config.n:
        raise DimensionError(f"operator dimension {op.n} does not match n={config.n}")

    truths = {
        (s, t): draw_ground_truth(config, model, holdout, scenario, t)
        for s, scenario in enumerate(config.scenarios)
        for t in range(config.trials)
    }
    clean = {key: op.forward(truth) for key, truth in truths.items()}
    cells = list(_iter_cells(config))
    logger.info("Running sweep with %d cells (%d workers)", len(cells), config.workers)

    def _solve(cell: _Cell) -> SweepRecord:
        sigma = config.sigma_grid[cell.sigma_index]
        scenario = config.scenarios[cell.scenario_index]
        truth = truths[(cell.scenario_index, cell.trial)]
        y, _ = add_noise(
            clean[(cell.scenario_index, cell.trial)],
            sigma,
            derive_seed(config.seed, SeedStream.NOISE, cell.scenario_index, cell.sigma_index, cell.trial),
        )
        lam, weights = lambda_for(config.lambda_rule, cell.method, sigma, op.m, model.k, model.n, config.lambda_scale)
        formulation = Formulation.create(
            cell.method,
            n=config.n,
            model=None if cell.method is FormulationKind.CONVENTIONAL else model,
            lam=lam,
            weights=weights,
        )
        problem = UnifiedProblem(formulation, op, y)
        solver = config.solver_config(
            derive_seed(config.seed, SeedStream.SOLVER, cell.scenario_index, cell.sigma_index, cell.trial)
        )
        snr = snr_db(op, truth, sigma)
        try:
            result = reconstruct(problem, solver)
        except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
            logger.warning("cell sigma=%g %s %s trial %d failed: %s", sigma, cell.method.value, scenario.value, cell.trial, exc)
            return SweepRecord(sigma, snr, cell.method, scenario, cell.trial, math.inf, math.inf, 0, False)
        error = relative_error(result.f, truth)
        logger.debug(
            "sigma=%g %s %s trial %d: error %.4g", sigma, cell.method.value, scenario.value, cell.trial, error
        )
        return SweepRecord(
            sigma=sigma,
            snr_db=snr,
            method=cell.method,
            scenario=scenario,
            trial=cell.trial,
            relative_error=error,
            residual=result.residual,
            iterations=result.iterations,
            converged=result.converged,
        )

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_solve, cells))
    else:
        records = [_solve(cell) for cell in cells]
    return SweepResult(records=records)


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def emit_csv(result: SweepResult, path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in result.records:
            writer.writerow(
                [
                    _format_float(record.sigma),
                    _format_float(record.snr_db),
                    record.method.value,
                    record.scenario.value,
                    record.trial,
                    _format_float(record.relative_error),
                    _format_float(record.residual),
                    record.iterations,
                    "true" if record.converged else "false",
                ]
            )
    logger.info("Wrote %d sweep records to %s", len(result.records), target)
    return target


def read_csv(path: Path | str) -> SweepResult:
    source = Path(path)
    records: list[SweepRecord] = []
    with source.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ParseError(f"unexpected header {header!r}", path=source, row=1)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} columns, found {len(row)}", path=source, row=line_no)
            try:
                records.append(
                    SweepRecord(
                        sigma=float(row[0]),
                        snr_db=float(row[1]),
                        method=FormulationKind(row[2]),
                        scenario=Scenario(row[3]),
                        trial=int(row[4]),
                        relative_error=float(row[5]),
                        residual=float(row[6]),
                        iterations=int(row[7]),
                        converged=row[8] == "true",
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), path=source, row=line_no) from exc
    return SweepResult(records=records)
