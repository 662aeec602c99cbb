# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Self-describing JSON model files for DMD, EDMD and DDL models."""

import dataclasses
import json
import logging
import typing
from pathlib import Path

import jsonschema
import numpy as np

import basis as basis_module
from basis import BasisError
from ddl import DdlModel, FitReport, TrainingHull
from linfit import DMD, EDMD, LinearModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DDL = "ddl"

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_VECTOR = {"type": "array", "items": {"type": "number"}}
_EXPONENTS = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
}

MODEL_FILE_JSON_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema",
    "type": "object",
    "properties": {
        "format": {"const": FORMAT_VERSION},
        "kind": {"enum": [DMD, EDMD, DDL]},
        "dt": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["format", "kind", "dt"],
    "allOf": [
        {
            "if": {"properties": {"kind": {"enum": [DMD, EDMD]}}},
            "then": {
                "properties": {
                    "D": _MATRIX,
                    "rank": {"type": "integer", "minimum": 0},
                    "warnings": {"type": "array", "items": {"type": "string"}},
                    "exponents": {"oneOf": [{"type": "null"}, _EXPONENTS]},
                },
                "required": ["D", "rank", "warnings", "exponents"],
            },
        },
        {
            "if": {"properties": {"kind": {"const": DDL}}},
            "then": {
                "properties": {
                    "B": _MATRIX,
                    "Q": _MATRIX,
                    "Qinv": _MATRIX,
                    "nu": {"type": "number"},
                    "exponents": _EXPONENTS,
                    "hull": {
                        "oneOf": [
                            {"type": "null"},
                            {
                                "type": "object",
                                "properties": {"lower": _VECTOR, "upper": _VECTOR},
                                "required": ["lower", "upper"],
                            },
                        ]
                    },
                    "report": {"oneOf": [{"type": "null"}, {"type": "object"}]},
                },
                "required": ["B", "Q", "Qinv", "nu", "exponents", "hull", "report"],
            },
        },
    ],
}

Model = typing.Union[LinearModel, DdlModel]


class ModelFileError(Exception):
    """Exception raised when a model file cannot be read or is invalid.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ModelFileError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


def _matrix(values: typing.Any) -> np.ndarray:
    """Rebuild a float matrix.

    Args:
        values: Nested lists.

    Returns:
        A 2-d array.
    """
    return np.atleast_2d(np.array(values, dtype=float))


def dump_model(model: Model) -> dict[str, typing.Any]:
    """Convert a model to a JSON-ready dictionary.

    Args:
        model: A DMD, EDMD or DDL model.

    Returns:
        The dictionary.

    Raises:
        ModelFileError: if the model type is unknown.
    """
    if isinstance(model, LinearModel):
        return {
            "format": FORMAT_VERSION,
            "kind": model.kind,
            "dt": model.dt,
            "D": model.D.tolist(),
            "rank": model.rank,
            "warnings": list(model.warnings),
            "exponents": (
                None if model.basis is None else [list(row) for row in model.basis.exponents]
            ),
        }
    if isinstance(model, DdlModel):
        return {
            "format": FORMAT_VERSION,
            "kind": DDL,
            "dt": model.dt,
            "B": model.B.tolist(),
            "Q": model.Q.tolist(),
            "Qinv": model.Qinv.tolist(),
            "nu": model.nu,
            "exponents": [list(row) for row in model.basis.exponents],
            "hull": (
                None
                if model.hull is None
                else {"lower": model.hull.lower.tolist(), "upper": model.hull.upper.tolist()}
            ),
            "report": None if model.report is None else dataclasses.asdict(model.report),
        }
    raise ModelFileError(f"Cannot store a model of type {type(model).__name__}.")


def load_model_dict(data: typing.Mapping[str, typing.Any]) -> Model:
    """Rebuild a model from its dictionary form.

    Args:
        data: The parsed file content.

    Returns:
        The model.

    Raises:
        ModelFileError: if the content violates the model file schema.
    """
    try:
        jsonschema.validate(instance=data, schema=MODEL_FILE_JSON_SCHEMA)
    except jsonschema.ValidationError as exc:
        logger.error("Model file does not match the schema, %s", exc.message)
        raise ModelFileError(f"Invalid model file: {exc.message}") from exc
    try:
        if data["kind"] in (DMD, EDMD):
            exponents = data["exponents"]
            return LinearModel(
                D=_matrix(data["D"]),
                dt=data["dt"],
                kind=data["kind"],
                basis=None if exponents is None else basis_module.basis_from_exponents(exponents),
                rank=data["rank"],
                warnings=tuple(data["warnings"]),
            )
        hull = data["hull"]
        report = data["report"]
        return DdlModel(
            basis=basis_module.basis_from_exponents(data["exponents"]),
            B=_matrix(data["B"]),
            Q=_matrix(data["Q"]),
            Qinv=_matrix(data["Qinv"]),
            dt=data["dt"],
            nu=data["nu"],
            hull=(
                None
                if hull is None
                else TrainingHull(
                    lower=np.array(hull["lower"], dtype=float),
                    upper=np.array(hull["upper"], dtype=float),
                )
            ),
            report=None if report is None else FitReport(**report),
        )
    except (BasisError, TypeError) as exc:
        logger.error("Model file content is inconsistent, %s", exc)
        raise ModelFileError(f"Inconsistent model file: {exc}") from exc


def save_model(model: Model, path: Path) -> None:
    """Write a model file.

    Args:
        model: The model.
        path: Destination path.

    Raises:
        ModelFileError: if the file cannot be written.
    """
    try:
        Path(path).write_text(json.dumps(dump_model(model), indent=1), encoding="utf-8")
    except OSError as exc:
        logger.error("Failed to write model file %s, %s", path, exc)
        raise ModelFileError(f"Failed to write model file {path}.") from exc
    logger.info("Model written to %s", path)


def load_model(path: Path) -> Model:
    """Read a model file.

    Args:
        path: Source path.

    Returns:
        The model.

    Raises:
        ModelFileError: if the file cannot be read or parsed.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        logger.error("Failed to read model file %s, %s", path, exc)
        raise ModelFileError(f"Failed to read model file {path}.") from exc
    return load_model_dict(data)
