# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Model file module tests."""

import json
from pathlib import Path

import numpy as np
import pytest

import linfit
import modelfile
from ddl import DdlModel
from linfit import SnapshotPairs


def test_ddl_model_round_trip(tmp_path: Path, stuart_landau_model: DdlModel):
    """
    arrange: given a fitted DDL model with hull and report.
    act: when it is saved and loaded.
    assert: every coefficient is recovered bit for bit.
    """
    path = tmp_path / "model.json"

    modelfile.save_model(stuart_landau_model, path)
    loaded = modelfile.load_model(path)

    assert isinstance(loaded, DdlModel), "Unexpected model type."
    for name in ("B", "Q", "Qinv"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(stuart_landau_model, name))
    np.testing.assert_array_equal(loaded.hull.lower, stuart_landau_model.hull.lower)
    np.testing.assert_array_equal(loaded.hull.upper, stuart_landau_model.hull.upper)
    assert loaded.basis == stuart_landau_model.basis, "Basis changed."
    assert loaded.report == stuart_landau_model.report, "Report changed."
    assert (loaded.dt, loaded.nu) == (stuart_landau_model.dt, stuart_landau_model.nu)


@pytest.mark.parametrize(
    "kind",
    [
        pytest.param(linfit.DMD, id="dmd"),
        pytest.param(linfit.EDMD, id="edmd"),
    ],
)
def test_linear_model_round_trip(
    tmp_path: Path, stuart_landau_pairs: SnapshotPairs, kind: str
):
    """
    arrange: given a DMD or EDMD model.
    act: when it is saved and loaded.
    assert: the propagator, the lift and the diagnostics are recovered.
    """
    model = (
        linfit.fit_dmd(stuart_landau_pairs)
        if kind == linfit.DMD
        else linfit.fit_edmd(stuart_landau_pairs, 3)
    )
    path = tmp_path / "model.json"

    modelfile.save_model(model, path)
    loaded = modelfile.load_model(path)

    assert loaded.kind == kind, "Unexpected kind."
    np.testing.assert_array_equal(loaded.D, model.D)
    assert loaded.basis == model.basis, "Lift changed."
    assert (loaded.rank, loaded.warnings) == (model.rank, model.warnings)


def test_dump_model_is_json(stuart_landau_model: DdlModel):
    """
    arrange: given a fitted DDL model.
    act: when it is dumped.
    assert: the dictionary serializes and carries the format version and kind.
    """
    data = json.loads(json.dumps(modelfile.dump_model(stuart_landau_model)))

    assert data["format"] == modelfile.FORMAT_VERSION, "Unexpected format version."
    assert data["kind"] == modelfile.DDL, "Unexpected kind."
    assert data["exponents"] == [[2], [3], [4]], "Unexpected exponents."


@pytest.mark.parametrize(
    "change",
    [
        pytest.param({"format": 2}, id="unknown format version"),
        pytest.param({"kind": "sindy"}, id="unknown kind"),
        pytest.param({"dt": 0}, id="zero step"),
        pytest.param({"Q": "zeros"}, id="non numeric coefficients"),
        pytest.param({"exponents": []}, id="empty basis"),
        pytest.param({"hull": {"lower": [0.0]}}, id="incomplete hull"),
    ],
)
def test_load_model_dict_schema_violation(stuart_landau_model: DdlModel, change: dict):
    """
    arrange: given a dumped model with one field broken.
    act: when it is loaded.
    assert: ModelFileError is raised.
    """
    data = {**modelfile.dump_model(stuart_landau_model), **change}

    with pytest.raises(modelfile.ModelFileError):
        modelfile.load_model_dict(data)


def test_load_model_dict_inconsistent_basis(stuart_landau_model: DdlModel):
    """
    arrange: given a dumped model whose exponents skip a degree.
    act: when it is loaded.
    assert: ModelFileError is raised.
    """
    data = {**modelfile.dump_model(stuart_landau_model), "exponents": [[2], [4]]}

    with pytest.raises(modelfile.ModelFileError):
        modelfile.load_model_dict(data)


def test_dump_model_unknown_type():
    """
    arrange: given an object that is not a model.
    act: when it is dumped.
    assert: ModelFileError is raised.
    """
    with pytest.raises(modelfile.ModelFileError):
        modelfile.dump_model(np.eye(2))


@pytest.mark.parametrize(
    "content",
    [
        pytest.param(None, id="missing file"),
        pytest.param("{not json", id="malformed json"),
    ],
)
def test_load_model_unreadable(tmp_path: Path, content: str):
    """
    arrange: given a missing or malformed model file.
    act: when it is loaded.
    assert: ModelFileError is raised.
    """
    path = tmp_path / "model.json"
    if content is not None:
        path.write_text(content, encoding="utf-8")

    with pytest.raises(modelfile.ModelFileError):
        modelfile.load_model(path)
