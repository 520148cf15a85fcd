"""Experiment layer: datasets, noise, metrics, the SNR sweep and its artifacts."""

from .datasets import complexify, load_digits, split_holdout
from .experiment_config import load_experiment_config
from .metrics import add_noise, relative_error, snr_db
from .plotting import emit_gallery, emit_plot
from .records import MeasurementRecord, ReconstructionRecord
from .sweep import (
    ExperimentConfig,
    LambdaRule,
    Scenario,
    SeedStream,
    SweepRecord,
    SweepResult,
    draw_ground_truth,
    emit_csv,
    lambda_for,
    prepare_experiment,
    read_csv,
    run_sweep,
    trained_on,
)

__all__ = [
    "ExperimentConfig",
    "LambdaRule",
    "MeasurementRecord",
    "ReconstructionRecord",
    "Scenario",
    "SeedStream",
    "SweepRecord",
    "SweepResult",
    "add_noise",
    "complexify",
    "draw_ground_truth",
    "emit_csv",
    "emit_gallery",
    "emit_plot",
    "lambda_for",
    "load_digits",
    "load_experiment_config",
    "prepare_experiment",
    "read_csv",
    "relative_error",
    "run_sweep",
    "snr_db",
    "split_holdout",
    "trained_on",
]
