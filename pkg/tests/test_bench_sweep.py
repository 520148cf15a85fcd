"""SNR sweep: configuration, lambda rules, ground truths, records and CSV output.

Test Timestamp: 2026-10-17T10:55:00+08:00
Coverage Scope: ExperimentConfig validation, lambda_for presets, draw_ground_truth,
run_sweep determinism (serial and threaded), failure recording, the
out-of-distribution bias floor and emit_csv/read_csv.
"""

from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import synthetic_digits
from phaseprior.bench.datasets import complexify
from phaseprior.bench.sweep import (
    CSV_HEADER,
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
from phaseprior.errors import ConfigError, DimensionError, NumericalError, ParseError
from phaseprior.generative import train_pca
from phaseprior.numerics import derive_seed
from phaseprior.optimize import FormulationKind


@pytest.fixture
def small_config() -> ExperimentConfig:
    return ExperimentConfig(
        n=16,
        k=4,
        num_probes=8,
        sigma_grid=(0.0, 1e-2),
        trials=2,
        seed=3,
        restarts=2,
        max_iter=300,
    )


@pytest.fixture
def prepared(small_config):
    images = [image / 16.0 for image in synthetic_digits(60, num_pixels=16, seed=1)]
    return prepare_experiment(small_config, images)


def _record(**overrides) -> SweepRecord:
    values = dict(
        sigma=0.1,
        snr_db=12.5,
        method=FormulationKind.GENERATIVE,
        scenario=Scenario.IN_DISTRIBUTION,
        trial=0,
        relative_error=0.25,
        residual=1.5,
        iterations=42,
        converged=True,
    )
    values.update(overrides)
    return SweepRecord(**values)


@pytest.mark.parametrize(
    "overrides",
    [
        {"sigma_grid": ()},
        {"sigma_grid": (0.1, 0.01)},
        {"sigma_grid": (-0.1,)},
        {"trials": 0},
        {"methods": ()},
        {"scenarios": ()},
        {"k": 64},
        {"holdout_fraction": 1.0},
        {"restarts": 0},
    ],
)
def test_invalid_configs_are_rejected(overrides):
    with pytest.raises(ConfigError):
        ExperimentConfig(**overrides)


def test_default_config_matches_the_digit_experiment():
    config = ExperimentConfig()
    assert (config.n, config.k, config.num_probes, config.m) == (64, 30, 100, 6400)
    assert len(config.sigma_grid) == 8
    assert list(config.sigma_grid) == sorted(config.sigma_grid)
    assert config.trials == 10


def test_lambda_presets():
    lam, weights = lambda_for(LambdaRule.PAPER, FormulationKind.CONVENTIONAL, 0.1, 100, 3, 8)
    assert lam == pytest.approx(0.01) and weights.tolist() == [1.0] * 8
    lam, weights = lambda_for("paper", FormulationKind.COMBINED, 0.1, 100, 3, 8)
    assert lam == pytest.approx(0.1) and weights.tolist() == [1.0] * 11
    lam, weights = lambda_for("noise_norm", FormulationKind.COMBINED, 0.1, 100, 3, 8, scale=2.0)
    assert lam == pytest.approx(2.0) and weights is None
    lam, weights = lambda_for("noise_norm", FormulationKind.GENERATIVE, 0.1, 100, 3, 8)
    assert lam == pytest.approx(0.01) and weights.tolist() == [1.0] * 3
    assert lambda_for("none", FormulationKind.COMBINED, 0.1, 100, 3, 8) == (0.0, None)


def test_ground_truths_are_deterministic(small_config, prepared):
    model, holdout = prepared
    a = draw_ground_truth(small_config, model, holdout, Scenario.IN_DISTRIBUTION, 1)
    b = draw_ground_truth(small_config, model, holdout, "in_distribution", 1)
    assert np.array_equal(a, b)
    assert model.bias_of(a) <= 1e-10
    ood = draw_ground_truth(small_config, model, holdout, Scenario.OUT_OF_DISTRIBUTION, 0)
    assert any(np.array_equal(ood, sample) for sample in holdout)
    with pytest.raises(ConfigError):
        draw_ground_truth(small_config, model, [], Scenario.OUT_OF_DISTRIBUTION, 0)


def test_sweep_records_cover_the_grid_in_index_order(small_config, prepared):
    model, holdout = prepared
    result = run_sweep(small_config, model, holdout)
    assert len(result) == 2 * 3 * 2 * 2
    keys = [(r.sigma, r.method, r.scenario, r.trial) for r in result.records]
    expected = [
        (sigma, method, scenario, trial)
        for sigma in small_config.sigma_grid
        for method in small_config.methods
        for scenario in small_config.scenarios
        for trial in range(small_config.trials)
    ]
    assert keys == expected
    assert all(r.relative_error >= 0 for r in result.records)
    assert all(math.isinf(r.snr_db) for r in result.records if r.sigma == 0.0)


def test_sweep_is_deterministic_and_schedule_independent(tmp_path: Path, small_config, prepared):
    model, holdout = prepared
    config = replace(small_config, sigma_grid=(1e-2,), trials=1)
    first = emit_csv(run_sweep(config, model, holdout), tmp_path / "a.csv")
    second = emit_csv(run_sweep(config, model, holdout), tmp_path / "b.csv")
    threaded = emit_csv(run_sweep(replace(config, workers=3), model, holdout), tmp_path / "c.csv")
    assert first.read_bytes() == second.read_bytes() == threaded.read_bytes()


def test_noiseless_in_distribution_generative_recovery(small_config, prepared):
    model, holdout = prepared
    config = replace(
        small_config,
        sigma_grid=(0.0,),
        trials=3,
        methods=(FormulationKind.GENERATIVE,),
        scenarios=(Scenario.IN_DISTRIBUTION,),
        restarts=8,
        max_iter=500,
    )
    result = run_sweep(config, model, holdout)
    assert result.mean_error(0.0, "generative", "in_distribution") <= 1e-3


def test_out_of_distribution_generative_error_has_a_bias_floor(small_config, prepared):
    model, holdout = prepared
    config = replace(
        small_config,
        sigma_grid=(1e-4,),
        trials=3,
        methods=(FormulationKind.GENERATIVE,),
        scenarios=(Scenario.OUT_OF_DISTRIBUTION,),
    )
    result = run_sweep(config, model, holdout)
    floors = []
    for trial in range(config.trials):
        truth = draw_ground_truth(config, model, holdout, Scenario.OUT_OF_DISTRIBUTION, trial)
        floors.append(model.bias_of(truth) / np.linalg.norm(truth))
    assert result.mean_error(1e-4, "generative", "out_of_distribution") >= 0.8 * float(np.mean(floors))


def test_solver_failures_are_recorded_not_raised(monkeypatch, small_config, prepared):
    model, holdout = prepared

    def _fail(problem, config):
        raise NumericalError("every restart failed")

    monkeypatch.setattr("phaseprior.bench.sweep.reconstruct", _fail)
    config = replace(small_config, sigma_grid=(1e-2,), trials=1)
    result = run_sweep(config, model, holdout)
    assert len(result) == 6
    assert all(not r.converged and math.isinf(r.relative_error) for r in result.records)


def test_sweep_rejects_mismatched_model(small_config, prepared):
    model, holdout = prepared
    with pytest.raises(DimensionError):
        run_sweep(replace(small_config, k=5), model, holdout)


def test_empty_result_writes_only_the_header(tmp_path: Path):
    path = emit_csv(SweepResult(), tmp_path / "empty.csv")
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"
    assert len(read_csv(path)) == 0


def test_csv_round_trip_is_lossless(tmp_path: Path):
    records = [
        _record(),
        _record(sigma=1.0 / 3.0, snr_db=-7.123456789012345, trial=1, relative_error=0.1 + 0.2, converged=False),
        _record(sigma=0.0, snr_db=math.inf, method=FormulationKind.COMBINED, scenario=Scenario.OUT_OF_DISTRIBUTION),
    ]
    path = emit_csv(SweepResult(records=records), tmp_path / "sweep.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "sigma,snr_db,method,scenario,trial,relative_error,residual,iterations,converged"
    assert len(lines) == 4
    assert read_csv(path).records == records


def test_single_record_file_has_two_lines(tmp_path: Path):
    path = emit_csv(SweepResult(records=[_record()]), tmp_path / "one.csv")
    assert len(path.read_text().splitlines()) == 2
    assert read_csv(path).records[0].method is FormulationKind.GENERATIVE


def test_malformed_csv_rows_name_the_line(tmp_path: Path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(CSV_HEADER) + "\n0.1,1,generative,in_distribution,0,0.2,0.3,4\n")
    with pytest.raises(ParseError) as excinfo:
        read_csv(path)
    assert excinfo.value.row == 2


def test_result_aggregates():
    result = SweepResult(
        records=[
            _record(relative_error=0.2),
            _record(relative_error=0.4, trial=1, snr_db=14.5),
            _record(method=FormulationKind.CONVENTIONAL, relative_error=0.9),
        ]
    )
    assert result.mean_error(0.1, "generative", "in_distribution") == pytest.approx(0.3)
    assert result.mean_snr_db(0.1, "in_distribution") == pytest.approx((12.5 + 14.5 + 12.5) / 3)
    assert result.methods() == [FormulationKind.GENERATIVE, FormulationKind.CONVENTIONAL]
    assert math.isnan(result.mean_error(0.5, "generative", "in_distribution"))


def test_prepare_experiment_checks_a_pretrained_model(small_config, prepared):
    images = [image / 16.0 for image in synthetic_digits(60, num_pixels=16, seed=1)]
    model, holdout = prepared
    reused, reused_holdout = prepare_experiment(small_config, images, model)
    assert reused is model
    assert all(np.array_equal(a, b) for a, b in zip(reused_holdout, holdout))

    everything = train_pca(complexify(images, derive_seed(small_config.seed, SeedStream.PAIRING)), small_config.k)
    assert not trained_on(everything, holdout)
    with pytest.raises(ConfigError, match="not trained on the training split"):
        prepare_experiment(small_config, images, everything)
    other_split, _ = prepare_experiment(replace(small_config, seed=small_config.seed + 1), images)
    with pytest.raises(ConfigError, match="--seed 3 --holdout-fraction 0.2"):
        prepare_experiment(small_config, images, other_split)


def test_seed_streams_are_distinct_and_stable():
    assert len({int(stream) for stream in SeedStream}) == len(SeedStream)
    assert (SeedStream.PAIRING, SeedStream.GALLERY) == (5, 7)
    assert derive_seed(3, SeedStream.NOISE, 1) == derive_seed(3, 3, 1)
