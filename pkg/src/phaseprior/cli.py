"""Command-line front end: model training, probe generation, simulation, reconstruction and sweeps."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .bench.datasets import complexify, load_digits
from .bench.experiment_config import load_experiment_config
from .bench.metrics import add_noise, relative_error
from .bench.plotting import emit_gallery, emit_plot
from .bench.records import MeasurementRecord, ReconstructionRecord
from .bench.sweep import (
    ExperimentConfig,
    LambdaRule,
    SeedStream,
    SweepResult,
    emit_csv,
    lambda_for,
    prepare_experiment,
    run_sweep,
)
from .bounds import BoundReport, assess_reconstruction
from .config import Settings
from .errors import (
    ConfigError,
    DatasetError,
    DimensionError,
    PhasePriorError,
)
from .generative import GenerativeModel, load_model, save_model, train_pca
from .logging_control import LOG_LEVELS, LogSettings, get_log_manager
from .measurement import MeasurementOperator, ProbeAlphabet, load_probes, make_probes, save_probes
from .numerics import derive_seed
from .optimize import Formulation, FormulationKind, SolverConfig, UnifiedProblem, reconstruct

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

GALLERY_SAMPLES = 8


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1 instead of argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--restarts", type=int, default=None, help="Number of random restarts")
    parser.add_argument("--max-iter", type=int, default=None, help="L-BFGS iteration limit per restart")
    parser.add_argument("--grad-tol", type=float, default=None, help="Relative gradient tolerance")
    parser.add_argument("--memory", type=int, default=None, help="L-BFGS history length")
    parser.add_argument("--init-scale", type=float, default=None, help="Std of the random initial point")
    parser.add_argument("--workers", type=int, default=None, help="Threads used for restarts")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="phaseprior", description="Phase retrieval with a PCA generative prior")
    parser.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, default=None, help="Override PHASEPRIOR_LOG_LEVEL")
    parser.add_argument("--log-file", type=Path, default=None, help="Also write logs to this rotating file")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    train = commands.add_parser("train", help="Train a PCA generative model from a digits CSV")
    train.add_argument("--dataset", type=Path, required=True, help="CSV file of real images")
    train.add_argument("-k", type=int, default=30, help="Latent dimension")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--num-pixels", type=int, default=64, help="Pixels per image row")
    train.add_argument("--holdout-fraction", type=float, default=0.2, help="Share held out from training; 0 trains on everything")
    train.add_argument("--output", type=Path, required=True, help="Model file to write")
    train.add_argument("--gallery", type=Path, default=None, help="Optional SVG of samples drawn from the model")

    probes = commands.add_parser("probes", help="Generate random probe patterns")
    probes.add_argument("--num-probes", type=int, required=True)
    probes.add_argument("--n", type=int, required=True)
    probes.add_argument("--seed", type=int, default=0)
    probes.add_argument("--alphabet", choices=[a.value for a in ProbeAlphabet], default=ProbeAlphabet.BINARY.value)
    probes.add_argument("--output", type=Path, required=True)

    simulate = commands.add_parser("simulate", help="Simulate noisy intensity measurements")
    simulate.add_argument("--probes", type=Path, required=True)
    simulate.add_argument("--sigma", type=float, required=True, help="Noise standard deviation")
    simulate.add_argument("--seed", type=int, default=0)
    source = simulate.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=Path, help="Draw the ground truth from this model")
    source.add_argument("--dataset", type=Path, help="Take the ground truth from this digits CSV")
    simulate.add_argument("--index", type=int, default=0, help="Row of the dataset used as ground truth")
    simulate.add_argument("--output", type=Path, required=True)

    rec = commands.add_parser("reconstruct", help="Reconstruct a signal from measurements")
    rec.add_argument("--measurements", type=Path, required=True)
    rec.add_argument("--probes", type=Path, required=True)
    rec.add_argument("--method", choices=[k.value for k in FormulationKind], required=True)
    rec.add_argument("--model", type=Path, default=None)
    penalty = rec.add_mutually_exclusive_group()
    penalty.add_argument("--lam", type=float, default=None, help="Explicit penalty weight")
    penalty.add_argument("--lambda-rule", choices=[r.value for r in LambdaRule], default=LambdaRule.PAPER.value)
    rec.add_argument("--lambda-scale", type=float, default=1.0)
    rec.add_argument("--seed", type=int, default=0)
    _add_solver_flags(rec)
    rec.add_argument("--output", type=Path, required=True)
    rec.add_argument("--report", type=Path, default=None, help="Also write a bound report (needs --model)")
    rec.add_argument("--pairs", type=int, default=2000, help="Sampled pairs per constant estimate")

    sweep = commands.add_parser("sweep", help="Run the error-versus-SNR experiment")
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument("--output-csv", type=Path, default=None)
    sweep.add_argument("--output-plot", type=Path, default=None)

    bounds = commands.add_parser("bounds", help="Evaluate error bounds for a reconstruction")
    bounds.add_argument("--reconstruction", type=Path, required=True)
    bounds.add_argument("--measurements", type=Path, required=True)
    bounds.add_argument("--probes", type=Path, required=True)
    bounds.add_argument("--model", type=Path, required=True)
    bounds.add_argument("--pairs", type=int, default=2000)
    bounds.add_argument("--seed", type=int, default=0)
    bounds.add_argument("--output", type=Path, required=True)
    return parser


def _configure_logging(args: argparse.Namespace, settings: Settings) -> None:
    log_settings = LogSettings(
        level=args.log_level or settings.log_level,
        log_file=args.log_file or settings.log_file,
    )
    get_log_manager(log_settings).configure_logging()


def _require(condition: bool, message: str) -> None:
    """Argument check made before any computation; failures are usage errors."""
    if not condition:
        raise ConfigError(message)


def _checked_solver(settings: Settings, seed: int, **overrides: object) -> SolverConfig:
    try:
        return settings.solver_config(seed, **overrides)
    except ValueError as exc:
        raise ConfigError(f"invalid solver flags: {exc}") from exc


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    _require(args.num_pixels >= 2, "--num-pixels must be at least 2")
    _require(1 <= args.k < args.num_pixels, f"-k must satisfy 1 <= k < {args.num_pixels}")
    _require(0 <= args.holdout_fraction < 1, "--holdout-fraction must lie in [0, 1)")
    images = load_digits(args.dataset, args.num_pixels)
    if args.holdout_fraction == 0:
        model = train_pca(complexify(images, derive_seed(args.seed, SeedStream.PAIRING)), args.k)
    else:
        config = ExperimentConfig(
            n=args.num_pixels,
            k=args.k,
            seed=args.seed,
            holdout_fraction=args.holdout_fraction,
        )
        model, _ = prepare_experiment(config, images)
    save_model(model, args.output)
    if args.gallery is not None:
        rng = np.random.default_rng(derive_seed(args.seed, SeedStream.GALLERY))
        samples = [model.generate(model.sample_latent(rng)) for _ in range(GALLERY_SAMPLES)]
        emit_gallery(samples, args.gallery)
    print(f"trained model n={model.n} k={model.k} from {model.num_train} samples -> {args.output}")
    return EXIT_OK


def cmd_probes(args: argparse.Namespace, settings: Settings) -> int:
    _require(args.num_probes >= 1, "--num-probes must be positive")
    _require(args.n >= 1, "--n must be positive")
    probe_set = make_probes(args.num_probes, args.n, args.seed, args.alphabet)
    save_probes(probe_set, args.output)
    print(f"wrote {probe_set.num_probes} probes of length {probe_set.n} -> {args.output}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    _require(math.isfinite(args.sigma) and args.sigma >= 0, "--sigma must be a finite non-negative number")
    operator = MeasurementOperator(load_probes(args.probes))
    if args.model is not None:
        model = load_model(args.model)
        truth = model.generate(model.sample_latent(derive_seed(args.seed, SeedStream.LATENT)))
    else:
        images = load_digits(args.dataset, operator.n)
        _require(0 <= args.index < len(images), f"--index {args.index} is outside the {len(images)} dataset rows")
        truth = complexify(images, derive_seed(args.seed, SeedStream.PAIRING))[args.index]
    noise_seed = derive_seed(args.seed, SeedStream.NOISE)
    y, eps_norm = add_noise(operator.forward(truth), args.sigma, noise_seed)
    MeasurementRecord(y=y, sigma=args.sigma, eps_norm=eps_norm, noise_seed=noise_seed, truth=truth).save(args.output)
    print(f"simulated {operator.m} intensities (sigma={args.sigma:g}, ||eps||={eps_norm:.6g}) -> {args.output}")
    return EXIT_OK


def _load_optional_model(path: Optional[Path], kind: FormulationKind) -> GenerativeModel | None:
    if path is not None:
        return load_model(path)
    if kind is not FormulationKind.CONVENTIONAL:
        raise ConfigError(f"--model is required for the {kind.value} method")
    return None


def cmd_reconstruct(args: argparse.Namespace, settings: Settings) -> int:
    kind = FormulationKind(args.method)
    _require(args.lam is None or (math.isfinite(args.lam) and args.lam >= 0), "--lam must be a finite non-negative number")
    _require(args.lambda_scale >= 0, "--lambda-scale must be non-negative")
    _require(args.pairs >= 2, "--pairs must be at least 2")
    solver = _checked_solver(
        settings,
        args.seed,
        restarts=args.restarts,
        max_iter=args.max_iter,
        grad_tol=args.grad_tol,
        memory=args.memory,
        init_scale=args.init_scale,
        workers=args.workers,
    )
    measurement = MeasurementRecord.load(args.measurements)
    operator = MeasurementOperator(load_probes(args.probes))
    model = _load_optional_model(args.model, kind)
    if args.report is not None and model is None:
        raise ConfigError("--report needs --model to estimate the model constants")

    weights = None
    if args.lam is not None:
        lam = args.lam
    else:
        k = model.k if model is not None else 0
        lam, weights = lambda_for(args.lambda_rule, kind, measurement.sigma, operator.m, k, operator.n, args.lambda_scale)
    formulation = Formulation.create(
        kind,
        n=operator.n,
        model=None if kind is FormulationKind.CONVENTIONAL else model,
        lam=lam,
        weights=weights,
    )
    problem = UnifiedProblem(formulation, operator, measurement.y)
    result = reconstruct(problem, solver)
    ReconstructionRecord.from_result(kind, lam, result).save(args.output)

    summary = f"{kind.value}: objective {result.objective_value:.6g}, residual {result.residual:.6g}"
    if measurement.truth is not None:
        summary += f", relative error {relative_error(result.f, measurement.truth):.6g}"
    print(summary)

    if args.report is not None and model is not None:
        report = assess_reconstruction(
            operator,
            model,
            lam=lam,
            residual=result.residual,
            eps_norm=measurement.eps_norm,
            truth=measurement.truth,
            reconstruction=result.f,
            num_pairs=args.pairs,
            seed=args.seed,
            noise_std=measurement.sigma,
        )
        report.save(args.report)
    return EXIT_OK


def _print_sweep_summary(result: SweepResult) -> None:
    for scenario in result.scenarios():
        print(f"[{scenario.value}]")
        for sigma in result.sigmas():
            errors = "  ".join(
                f"{method.value}={result.mean_error(sigma, method, scenario):.3e}" for method in result.methods()
            )
            print(f"  sigma={sigma:.3e} snr={result.mean_snr_db(sigma, scenario):7.2f} dB  {errors}")


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    config = load_experiment_config(args.config)
    config = replace(
        config,
        output_csv=args.output_csv or config.output_csv or Path("sweep.csv"),
        output_plot=args.output_plot or config.output_plot,
    )
    if config.dataset is not None:
        pretrained = load_model(config.model) if config.model is not None else None
        model, holdout = prepare_experiment(config, load_digits(config.dataset, config.n), pretrained)
    elif config.model is not None:
        model, holdout = load_model(config.model), []
    else:
        raise ConfigError("sweep needs 'dataset' (and optionally 'model') in the configuration")

    result = run_sweep(config, model, holdout)
    emit_csv(result, config.output_csv)
    if config.output_plot is not None:
        emit_plot(result, config.output_plot)
    _print_sweep_summary(result)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace, settings: Settings) -> int:
    _require(args.pairs >= 2, "--pairs must be at least 2")
    record = ReconstructionRecord.load(args.reconstruction)
    measurement = MeasurementRecord.load(args.measurements)
    operator = MeasurementOperator(load_probes(args.probes))
    model = load_model(args.model)
    report = assess_reconstruction(
        operator,
        model,
        lam=record.lam,
        residual=record.residual,
        eps_norm=measurement.eps_norm,
        truth=measurement.truth,
        reconstruction=record.f,
        num_pairs=args.pairs,
        seed=args.seed,
        noise_std=measurement.sigma,
    )
    report.save(args.output)
    _print_report(report)
    return EXIT_OK


def _print_report(report: BoundReport) -> None:
    print(f"alpha={report.alpha:.4g} beta={report.beta:.4g} gamma={report.gamma:.4g} ({report.num_pairs} pairs)")
    print(f"lemma1 {report.lemma1:.6g}  lemma2 {report.lemma2:.6g}  lemma3 {report.lemma3:.6g}")
    print(f"bias interval [{report.bias_lo:.6g}, {report.bias_hi:.6g}] detected={report.bias_detected}")
    if not math.isnan(report.error):
        print(f"measured error {report.error:.6g}")


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "train": cmd_train,
    "probes": cmd_probes,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, (DatasetError, DimensionError, OSError)):
        return EXIT_DATA
    # NumericalError, EstimationError and ParameterError raised mid-computation
    return EXIT_NUMERICAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        settings = Settings.from_env()
        _configure_logging(args, settings)
        return COMMANDS[args.command](args, settings)
    except (PhasePriorError, OSError) as exc:
        code = exit_code_for(exc)
        logger.debug("command %s failed", args.command, exc_info=True)
        print(f"phaseprior {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
