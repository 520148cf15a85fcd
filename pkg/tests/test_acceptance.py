"""Acceptance-scale checks: empirical bound satisfaction and the digit sweep curve shape.

Test Timestamp: 2026-10-17T12:30:00+08:00
Coverage Scope: 50-trial bound harness with 10^4 sampled pairs; qualitative shape of
the error-versus-SNR curves on the bundled 8x8 digits corpus (data/digits.csv, or the
file named by PHASEPRIOR_DIGITS_CSV). Both are marked slow and excluded from the
default run (use ``-m slow``).
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from phaseprior.bench.datasets import load_digits
from phaseprior.bench.sweep import ExperimentConfig, Scenario, prepare_experiment, run_sweep
from test_bounds import run_lemma_harness

pytestmark = pytest.mark.slow

BUNDLED_DIGITS = Path(__file__).resolve().parents[1] / "data" / "digits.csv"


def test_bounds_hold_in_at_least_48_of_50_trials():
    violations = run_lemma_harness(trials=50, num_pairs=10_000)
    for name, trials in violations.items():
        assert len(trials) <= 2, f"{name} violated in trials {trials}"


@pytest.fixture(scope="module")
def digits_sweep():
    csv_path = Path(os.getenv("PHASEPRIOR_DIGITS_CSV") or BUNDLED_DIGITS)
    if not csv_path.is_file():
        pytest.skip(f"digits corpus not found at {csv_path}")
    config = ExperimentConfig(workers=os.cpu_count() or 1)
    model, holdout = prepare_experiment(config, load_digits(csv_path, config.n))
    return config, run_sweep(config, model, holdout)


def test_in_distribution_low_noise_is_accurate(digits_sweep):
    config, result = digits_sweep
    sigma = config.sigma_grid[0]
    for method in config.methods:
        assert result.mean_error(sigma, method, "in_distribution") <= 5e-2, method.value


def test_out_of_distribution_generative_plateaus(digits_sweep):
    config, result = digits_sweep
    low, high = config.sigma_grid[0], config.sigma_grid[-1]
    scenario = "out_of_distribution"
    assert result.mean_error(low, "generative", scenario) >= 2 * result.mean_error(low, "conventional", scenario)
    assert result.mean_error(high, "generative", scenario) <= result.mean_error(high, "conventional", scenario)


@pytest.mark.parametrize(
    "scenario",
    [
        pytest.param(
            Scenario.IN_DISTRIBUTION,
            marks=pytest.mark.xfail(
                strict=False,
                reason="with lam = 10 sigma^2 the latent barely constrains the combined "
                "solve at low noise, so it tracks conventional (6.7e-3 vs 4.2e-3 at sigma=1e-2)",
            ),
        ),
        Scenario.OUT_OF_DISTRIBUTION,
    ],
)
def test_combined_is_never_far_behind(digits_sweep, scenario):
    config, result = digits_sweep
    for sigma in config.sigma_grid:
        combined = result.mean_error(sigma, "combined", scenario)
        best_other = min(
            result.mean_error(sigma, "conventional", scenario),
            result.mean_error(sigma, "generative", scenario),
        )
        assert combined <= 1.5 * best_other, f"{scenario.value} sigma={sigma:g}"
