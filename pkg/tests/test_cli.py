"""End-to-end command line runs on small problems.

Test Timestamp: 2026-10-17T12:05:00+08:00
Coverage Scope: train, probes, simulate, reconstruct, bounds and sweep commands;
exit codes for usage errors, bad input data and missing models.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from phaseprior.bench.records import MeasurementRecord, ReconstructionRecord
from phaseprior.bench.sweep import read_csv
from phaseprior.bounds import BoundReport
from phaseprior.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, exit_code_for, main
from phaseprior.errors import ConfigError, DatasetError, NumericalError, ParseError
from phaseprior.generative import load_model
from phaseprior.measurement import load_probes


@pytest.fixture
def workspace(tmp_path: Path, digits_csv: Path) -> dict[str, Path]:
    model = tmp_path / "model.txt"
    probes = tmp_path / "probes.txt"
    assert main(["train", "--dataset", str(digits_csv), "-k", "5", "--output", str(model)]) == EXIT_OK
    assert main(["probes", "--num-probes", "4", "--n", "64", "--seed", "3", "--output", str(probes)]) == EXIT_OK
    return {"root": tmp_path, "dataset": digits_csv, "model": model, "probes": probes}


def test_train_and_probes_write_files(workspace, capsys):
    model = load_model(workspace["model"])
    assert (model.n, model.k) == (64, 5)
    assert model.num_train == 120
    probes = load_probes(workspace["probes"])
    assert (probes.num_probes, probes.n) == (4, 64)


def test_train_on_everything_with_gallery(tmp_path: Path, digits_csv: Path):
    model_path = tmp_path / "full.txt"
    gallery = tmp_path / "gallery.svg"
    code = main(
        [
            "train",
            "--dataset",
            str(digits_csv),
            "-k",
            "4",
            "--holdout-fraction",
            "0",
            "--output",
            str(model_path),
            "--gallery",
            str(gallery),
        ]
    )
    assert code == EXIT_OK
    assert load_model(model_path).num_train == 150
    assert gallery.read_text().startswith("<?xml")


def test_simulate_reconstruct_and_bounds(workspace, capsys):
    root = workspace["root"]
    measurements = root / "meas.yaml"
    reconstruction = root / "rec.yaml"
    report = root / "report.txt"
    code = main(
        [
            "simulate",
            "--probes",
            str(workspace["probes"]),
            "--model",
            str(workspace["model"]),
            "--sigma",
            "0.001",
            "--seed",
            "2",
            "--output",
            str(measurements),
        ]
    )
    assert code == EXIT_OK
    record = MeasurementRecord.load(measurements)
    assert record.y.shape == (256,)
    assert record.truth is not None and record.eps_norm > 0

    code = main(
        [
            "reconstruct",
            "--measurements",
            str(measurements),
            "--probes",
            str(workspace["probes"]),
            "--method",
            "generative",
            "--model",
            str(workspace["model"]),
            "--restarts",
            "2",
            "--max-iter",
            "200",
            "--output",
            str(reconstruction),
        ]
    )
    assert code == EXIT_OK
    assert "relative error" in capsys.readouterr().out
    rec = ReconstructionRecord.load(reconstruction)
    assert rec.method.value == "generative"
    assert rec.x.shape == (5,) and rec.f.shape == (64,)

    code = main(
        [
            "bounds",
            "--reconstruction",
            str(reconstruction),
            "--measurements",
            str(measurements),
            "--probes",
            str(workspace["probes"]),
            "--model",
            str(workspace["model"]),
            "--pairs",
            "200",
            "--output",
            str(report),
        ]
    )
    assert code == EXIT_OK
    loaded = BoundReport.load(report)
    assert loaded.bias_source == "truth"
    assert loaded.alpha > 0 and loaded.num_pairs == 200
    assert "lemma1" in capsys.readouterr().out


def test_simulate_from_dataset_row(workspace):
    output = workspace["root"] / "row.yaml"
    code = main(
        [
            "simulate",
            "--probes",
            str(workspace["probes"]),
            "--dataset",
            str(workspace["dataset"]),
            "--index",
            "3",
            "--sigma",
            "0",
            "--output",
            str(output),
        ]
    )
    assert code == EXIT_OK
    assert MeasurementRecord.load(output).eps_norm == 0.0


def test_sweep_command(workspace, capsys):
    root = workspace["root"]
    config = root / "tiny.conf"
    config.write_text(
        "n = 64\nk = 4\nnum_probes = 4\nsigma_grid = 0.01, 0.1\ntrials = 1\n"
        "methods = generative\nscenarios = in_distribution\nrestarts = 1\nmax_iter = 100\n"
        f"dataset = {workspace['dataset'].name}\n"
    )
    csv_path = root / "out" / "sweep.csv"
    plot_path = root / "out" / "sweep.svg"
    code = main(["sweep", "--config", str(config), "--output-csv", str(csv_path), "--output-plot", str(plot_path)])
    assert code == EXIT_OK
    assert len(read_csv(csv_path)) == 2
    assert plot_path.exists()
    assert "[in_distribution]" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [[], ["probes", "--n", "8"], ["reconstruct", "--method", "sparse"], ["bogus"]])
def test_usage_errors_exit_with_one(argv):
    assert main(argv) == EXIT_USAGE


def test_reconstruct_without_model_is_a_usage_error(workspace, capsys):
    root = workspace["root"]
    measurements = root / "meas.yaml"
    main(["simulate", "--probes", str(workspace["probes"]), "--model", str(workspace["model"]), "--sigma", "0", "--output", str(measurements)])
    code = main(
        [
            "reconstruct",
            "--measurements",
            str(measurements),
            "--probes",
            str(workspace["probes"]),
            "--method",
            "combined",
            "--output",
            str(root / "rec.yaml"),
        ]
    )
    assert code == EXIT_USAGE
    assert "--model is required" in capsys.readouterr().err


def test_bad_input_data_exits_with_two(tmp_path: Path, workspace):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n")
    assert main(["train", "--dataset", str(bad), "--output", str(tmp_path / "m.txt")]) == EXIT_DATA
    missing = tmp_path / "missing.yaml"
    code = main(
        [
            "reconstruct",
            "--measurements",
            str(missing),
            "--probes",
            str(workspace["probes"]),
            "--method",
            "conventional",
            "--output",
            str(tmp_path / "rec.yaml"),
        ]
    )
    assert code == EXIT_DATA


def test_dimension_mismatch_exits_with_two(tmp_path: Path, workspace):
    probes = tmp_path / "small_probes.txt"
    assert main(["probes", "--num-probes", "2", "--n", "16", "--output", str(probes)]) == EXIT_OK
    code = main(
        ["simulate", "--probes", str(probes), "--model", str(workspace["model"]), "--sigma", "0", "--output", str(tmp_path / "m.yaml")]
    )
    assert code == EXIT_DATA


def test_exit_code_mapping():
    assert exit_code_for(ConfigError("x")) == EXIT_USAGE
    assert exit_code_for(ParseError("x", row=3)) == EXIT_DATA
    assert exit_code_for(DatasetError("x")) == EXIT_DATA
    assert exit_code_for(FileNotFoundError("x")) == EXIT_DATA
    assert exit_code_for(NumericalError("x")) == EXIT_NUMERICAL


@pytest.mark.parametrize(
    "argv",
    [
        ["probes", "--num-probes", "0", "--n", "8"],
        ["probes", "--num-probes", "2", "--n", "0"],
        ["simulate", "--sigma", "-0.5"],
        ["simulate", "--sigma", "0", "--index", "999"],
        ["reconstruct", "--method", "conventional", "--restarts", "0"],
        ["reconstruct", "--method", "conventional", "--lam", "-1"],
        ["train", "-k", "64"],
        ["train", "-k", "4", "--holdout-fraction", "1.0"],
    ],
)
def test_out_of_range_arguments_are_usage_errors(tmp_path: Path, workspace, argv, capsys):
    inputs = {
        "simulate": ["--probes", str(workspace["probes"]), "--dataset", str(workspace["dataset"])],
        "reconstruct": [
            "--measurements",
            str(tmp_path / "missing.yaml"),
            "--probes",
            str(workspace["probes"]),
        ],
        "train": ["--dataset", str(workspace["dataset"])],
    }
    command = argv[0]
    full = [command, *inputs.get(command, []), *argv[1:], "--output", str(tmp_path / "out")]
    assert main(full) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def _tiny_sweep_config(path: Path, dataset: Path, model: Path, seed: int) -> Path:
    path.write_text(
        f"n = 64\nk = 5\nnum_probes = 4\nsigma_grid = 0.01\ntrials = 1\nseed = {seed}\n"
        "methods = generative\nscenarios = out_of_distribution\nrestarts = 1\nmax_iter = 50\n"
        f"dataset = {dataset}\nmodel = {model}\n"
    )
    return path


def test_sweep_accepts_a_model_trained_on_its_split(workspace):
    root = workspace["root"]
    config = _tiny_sweep_config(root / "matching.conf", workspace["dataset"], workspace["model"], seed=0)
    assert main(["sweep", "--config", str(config), "--output-csv", str(root / "ok.csv")]) == EXIT_OK
    assert len(read_csv(root / "ok.csv")) == 1


@pytest.mark.parametrize("train_flags", [["--holdout-fraction", "0"], ["--seed", "4"]])
def test_sweep_rejects_a_model_that_saw_held_out_samples(workspace, train_flags, capsys):
    root = workspace["root"]
    other = root / "other_model.txt"
    assert main(["train", "--dataset", str(workspace["dataset"]), "-k", "5", *train_flags, "--output", str(other)]) == EXIT_OK
    config = _tiny_sweep_config(root / "mismatch.conf", workspace["dataset"], other, seed=0)
    assert main(["sweep", "--config", str(config), "--output-csv", str(root / "bad.csv")]) == EXIT_USAGE
    assert "not trained on the training split" in capsys.readouterr().err
    assert not (root / "bad.csv").exists()
