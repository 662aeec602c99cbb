# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command-line front end tests."""

import json
from pathlib import Path

import pandas as pd
import pytest

import cli
import modelfile
from ddl import DdlModel


@pytest.fixture(name="duffing_csv")
def duffing_csv_fixture(tmp_path: Path) -> Path:
    """Simulated Duffing observables, one trajectory."""
    path = tmp_path / "duffing.csv"
    exit_code = cli.main(
        ["simulate", "--system", "duffing", "--x0", "1.2,0", "--t", "50", "--dt", "0.1"]
        + ["-o", str(path)]
    )
    assert exit_code == cli.EXIT_OK, "Simulation failed."
    return path


@pytest.fixture(name="stuart_landau_csv")
def stuart_landau_csv_fixture(tmp_path: Path) -> Path:
    """Simulated Stuart-Landau observables, three trajectories."""
    path = tmp_path / "stuart_landau.csv"
    exit_code = cli.main(
        ["simulate", "--system", "stuart-landau", "--count", "3", "--radius", "0.1"]
        + ["--t", "5", "--dt", "0.05", "-o", str(path)]
    )
    assert exit_code == cli.EXIT_OK, "Simulation failed."
    return path


@pytest.fixture(name="dmd_model")
def dmd_model_fixture(tmp_path: Path, duffing_csv: Path) -> Path:
    """DMD model file of the Duffing data."""
    path = tmp_path / "dmd.json"
    exit_code = cli.main(["fit", str(duffing_csv), "--method", "dmd", "-o", str(path)])
    assert exit_code == cli.EXIT_OK, "Fit failed."
    return path


def test_simulate_single_trajectory(duffing_csv: Path):
    """
    arrange: given the Duffing system and one initial state.
    act: when it is simulated for 50 time units with step 0.1.
    assert: 501 rows of time and two observables are written.
    """
    frame = pd.read_csv(duffing_csv)

    assert list(frame.columns) == ["t", "phi_1", "phi_2"], "Unexpected columns."
    assert len(frame) == 501, "Unexpected row count."


def test_simulate_batch(stuart_landau_csv: Path):
    """
    arrange: given the radial Stuart-Landau system.
    act: when three random initial conditions are simulated.
    assert: the table carries a trajectory column with three labels.
    """
    frame = pd.read_csv(stuart_landau_csv)

    assert "trajectory" in frame.columns, "Missing trajectory column."
    assert frame["trajectory"].nunique() == 3, "Unexpected trajectory count."


def test_fit_writes_model_and_report(dmd_model: Path):
    """
    arrange: given simulated Duffing data.
    act: when a DMD model is fitted.
    assert: a loadable model and a report with two eigenvalues are written.
    """
    report = json.loads(dmd_model.with_suffix(".report.json").read_text(encoding="utf-8"))

    assert modelfile.load_model(dmd_model).kind == "dmd", "Unexpected model kind."
    assert len(report["eigenvalues"]) == 2, "Unexpected eigenvalue count."


def test_fit_ddl_then_validity(tmp_path: Path, stuart_landau_csv: Path):
    """
    arrange: given simulated Stuart-Landau data.
    act: when a cubic DDL model is fitted and its validity domain sampled.
    assert: a DDL model is stored and every sample row reports the same radius.
    """
    model_path = tmp_path / "ddl.json"
    output = tmp_path / "validity.csv"

    fit_code = cli.main(
        ["fit", str(stuart_landau_csv), "--method", "ddl", "-k", "3", "-o", str(model_path)]
    )
    validity_code = cli.main(["validity", "--model", str(model_path), "-o", str(output)])

    assert (fit_code, validity_code) == (cli.EXIT_OK, cli.EXIT_OK), "Command failed."
    assert isinstance(modelfile.load_model(model_path), DdlModel), "Unexpected model type."
    frame = pd.read_csv(output)
    assert list(frame.columns) == ["phi_1", "error", "valid", "radius"], "Unexpected columns."
    assert frame["radius"].nunique() == 1, "Radius must be constant."


def test_fit_ddl_higher_optimization_order(tmp_path: Path, stuart_landau_csv: Path):
    """
    arrange: given simulated Stuart-Landau data.
    act: when a DDL model is optimized at order 6 and stored at order 3.
    assert: the stored model has order 3 with two coefficients per map.
    """
    model_path = tmp_path / "ddl.json"

    exit_code = cli.main(
        ["fit", str(stuart_landau_csv), "--method", "ddl", "-k", "3", "--fit-order", "6"]
        + ["-o", str(model_path)]
    )

    assert exit_code == cli.EXIT_OK, "Fit failed."
    model = modelfile.load_model(model_path)
    assert isinstance(model, DdlModel), "Unexpected model type."
    assert model.order == 3, "Model not truncated."
    assert model.Q.shape == (1, 2) and model.Qinv.shape == (1, 2), "Unexpected coefficients."


def test_predict_against_truth(tmp_path: Path, dmd_model: Path, duffing_csv: Path):
    """
    arrange: given a DMD model and the data it was fitted on.
    act: when a prediction is made against the data.
    assert: the prediction covers the data and carries an error column.
    """
    output = tmp_path / "prediction.csv"

    exit_code = cli.main(
        ["predict", "--model", str(dmd_model), "--truth", str(duffing_csv), "-o", str(output)]
    )

    assert exit_code == cli.EXIT_OK, "Prediction failed."
    frame = pd.read_csv(output)
    assert len(frame) == 501, "Prediction must cover the reference."
    assert "error" in frame.columns, "Missing error column."
    assert frame["error"].iloc[0] == 0.0, "Prediction must start on the reference."


def test_predict_from_initial_state(
    dmd_model: Path, capsys: pytest.CaptureFixture[str]
):
    """
    arrange: given a DMD model with step 0.1.
    act: when one time unit is predicted to stdout.
    assert: eleven rows are printed.
    """
    exit_code = cli.main(["predict", "--model", str(dmd_model), "--x0", "0.1,0", "--t", "1"])

    assert exit_code == cli.EXIT_OK, "Prediction failed."
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "t,phi_1,phi_2", "Unexpected header."
    assert len(lines) == 12, "Unexpected row count."


def test_frc_dmd_model(tmp_path: Path, dmd_model: Path):
    """
    arrange: given a DMD model of the Duffing oscillator.
    act: when forced responses at two amplitudes are written to a directory.
    assert: one table and one anchor file per amplitude are written.
    """
    output = tmp_path / "frc"

    exit_code = cli.main(
        ["frc", "--model", str(dmd_model), "--system", "duffing", "--epsilons", "0.001,0.002"]
        + ["--omega-range", "1.3-1.5", "-o", str(output)]
    )

    assert exit_code == cli.EXIT_OK, "Forced response failed."
    for epsilon in ("0.001", "0.002"):
        frame = pd.read_csv(output / f"frc_{epsilon}.csv")
        assert list(frame.columns) == ["omega", "amplitude", "stable", "fold"]
        assert len(frame) == 101, "Unexpected frequency count."
        anchors = json.loads((output / f"frc_{epsilon}.json").read_text(encoding="utf-8"))
        assert anchors["kind"] == "dmd", "Unexpected branch kind."


def test_spectrum(dmd_model: Path, capsys: pytest.CaptureFixture[str]):
    """
    arrange: given a DMD model of the Duffing oscillator.
    act: when its spectrum is printed.
    assert: one conjugate pair of weakly damped eigenvalues is listed.
    """
    exit_code = cli.main(["spectrum", "--model", str(dmd_model)])

    assert exit_code == cli.EXIT_OK, "Spectrum failed."
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "real,imag,modulus,rate,frequency,damping", "Unexpected header."
    assert len(lines) == 3, "Unexpected eigenvalue count."


def test_compare(tmp_path: Path, stuart_landau_csv: Path):
    """
    arrange: given three Stuart-Landau trajectories.
    act: when the methods are compared on the last one.
    assert: one error row per method is written.
    """
    output = tmp_path / "compare.csv"

    exit_code = cli.main(["compare", str(stuart_landau_csv), "-k", "3", "-o", str(output)])

    assert exit_code == cli.EXIT_OK, "Comparison failed."
    frame = pd.read_csv(output)
    assert list(frame["method"]) == ["dmd", "edmd", "ddl"], "Unexpected methods."


def test_config_file(tmp_path: Path):
    """
    arrange: given a YAML run description of a simulation.
    act: when simulate runs with only the config file and an output flag.
    assert: the file values are used.
    """
    config_path = tmp_path / "run.yaml"
    config_path.write_text(
        "system: duffing\nx0: [1.1, 0.0]\nt: 2\ndt: 0.5\n", encoding="utf-8"
    )
    output = tmp_path / "out.csv"

    exit_code = cli.main(["simulate", "--config", str(config_path), "-o", str(output)])

    assert exit_code == cli.EXIT_OK, "Simulation failed."
    assert len(pd.read_csv(output)) == 5, "Config values not applied."


@pytest.mark.parametrize(
    "argv",
    [
        pytest.param(["simulate", "--system", "lorenz"], id="unknown system"),
        pytest.param(["simulate"], id="simulate without system"),
        pytest.param(["predict", "--model", "missing.json", "--t", "1"], id="missing model"),
        pytest.param(["frc", "--model", "m.json", "--omega-range", "2"], id="invalid range"),
    ],
)
def test_usage_errors(argv: list[str]):
    """
    arrange: given an inconsistent command line.
    act: when the command runs.
    assert: the usage exit code is returned.
    """
    assert cli.main(argv) == cli.EXIT_USAGE, "Unexpected exit code."


def test_fit_to_stdout_is_usage_error(duffing_csv: Path):
    """
    arrange: given trajectory data.
    act: when a fit is requested without an output path.
    assert: the usage exit code is returned.
    """
    assert cli.main(["fit", str(duffing_csv), "--method", "dmd"]) == cli.EXIT_USAGE


def test_numerical_error(tmp_path: Path, duffing_csv: Path):
    """
    arrange: given two-dimensional data.
    act: when a three-dimensional model is requested.
    assert: the numerical failure exit code is returned.
    """
    exit_code = cli.main(
        ["fit", str(duffing_csv), "-d", "3", "--method", "dmd", "-o", str(tmp_path / "m.json")]
    )

    assert exit_code == cli.EXIT_NUMERICAL, "Unexpected exit code."


def test_missing_command():
    """
    arrange: given no command.
    act: when the parser runs.
    assert: argparse exits with status 2.
    """
    with pytest.raises(SystemExit) as exit_info:
        cli.main([])

    assert exit_info.value.code == cli.EXIT_USAGE, "Unexpected exit status."
