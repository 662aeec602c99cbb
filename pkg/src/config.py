# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Validated run configuration."""

import logging
import typing
from pathlib import Path

import yaml
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "fit", "predict", "frc", "compare", "spectrum", "validity")
METHODS = ("dmd", "edmd", "ddl")
JACOBIANS = ("analytic", "finite-difference")
MODEL_COMMANDS = ("predict", "frc", "spectrum", "validity")
INPUT_COMMANDS = ("fit", "compare")


class ConfigError(Exception):
    """Represents an error with the run configuration."""


class ConfigInvalidError(ConfigError):
    """Exception raised when a run configuration is found to be invalid.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ConfigInvalidError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class InvalidFrequencyRangeError(ConfigError):
    """Represents an invalid forcing frequency range."""


class FrequencyRange(BaseModel):
    """Forcing frequency window swept by continuation.

    Attributes:
        start: Frequency the sweep starts from.
        end: Frequency the sweep ends at; may be below start for downward sweeps.
    """

    start: float = Field(..., gt=0)
    end: float = Field(..., gt=0)

    # Pflake8 & pylint don't quite understand that this is a classmethod using Pydantic.
    @root_validator(skip_on_failure=True)
    def validate_range(  # pylint: disable=no-self-argument
        cls: "FrequencyRange", values: dict  # noqa: N805
    ) -> dict:
        """Validate the frequency range.

        Args:
            values: The value keys of the model.

        Returns:
            A dictionary validated values.

        Raises:
            ValueError: if the range is empty.
        """
        # it is okay to cast it since the field level validation has ran before root validation.
        start = typing.cast(float, values["start"])
        end = typing.cast(float, values["end"])
        if start == end:
            raise ValueError("Frequency range cannot be empty.")
        return values

    @classmethod
    def from_str(cls, frequency_range: str) -> "FrequencyRange":
        """Instantiate the class from a "start-end" string.

        Args:
            frequency_range: The range, e.g. "1.3-1.5".

        Raises:
            InvalidFrequencyRangeError: if invalid frequency range was given.

        Returns:
            FrequencyRange: if a valid frequency range was given.
        """
        try:
            (start, end) = (float(value) for value in frequency_range.split("-"))
        except ValueError as exc:
            raise InvalidFrequencyRangeError(
                f"Invalid frequency range {frequency_range}, expected two numbers as start-end."
            ) from exc
        try:
            parsed = cls(start=start, end=end)
        except ValidationError as exc:
            raise InvalidFrequencyRangeError(
                f"Invalid frequency range {frequency_range}, bounds must be positive and distinct."
            ) from exc
        return parsed

    @property
    def low(self) -> float:
        """Smaller bound.

        Returns:
            min(start, end).
        """
        return min(self.start, self.end)

    @property
    def high(self) -> float:
        """Larger bound.

        Returns:
            max(start, end).
        """
        return max(self.start, self.end)

    def values(self, step: float) -> list[float]:
        """Grid the window from start to end, end included.

        Args:
            step: Positive grid spacing.

        Returns:
            The frequencies in sweep order.

        Raises:
            InvalidFrequencyRangeError: if the step is not positive.
        """
        if step <= 0:
            raise InvalidFrequencyRangeError(f"Invalid frequency step {step}.")
        count = max(int(round(abs(self.end - self.start) / step)), 1)
        direction = 1.0 if self.end > self.start else -1.0
        grid = [self.start + direction * step * index for index in range(count)]
        return [*grid, self.end]

    def contains(self, omega: float) -> bool:
        """Check whether a frequency lies in the closed window.

        Args:
            omega: Frequency.

        Returns:
            True if inside.
        """
        return self.low <= omega <= self.high


class FitSettings(BaseModel):
    """Model fitting parameters.

    Attributes:
        method: One of dmd, edmd, ddl.
        d: Reduced dimension; the data dimension when absent.
        k: Polynomial order.
        fit_order: Optimization order truncated to k afterwards; k when absent.
        nu: Weight of the round-trip term.
        tol: Absolute cost tolerance.
        max_iter: Maximum optimizer trial steps.
        svd_rtol: Relative pseudo-inverse cutoff.
        stride: Snapshot stride in samples.
        jacobian: Optimizer Jacobian, analytic or finite-difference.
    """

    method: str = "ddl"
    d: typing.Optional[int] = Field(None, ge=1)
    k: int = Field(5, ge=2)
    fit_order: typing.Optional[int] = Field(None, ge=2)
    nu: float = Field(1.0, gt=0)
    tol: float = Field(1e-18, gt=0)
    max_iter: int = Field(500, ge=1)
    svd_rtol: float = Field(1e-10, gt=0)
    stride: int = Field(1, ge=1)
    jacobian: str = "analytic"

    @validator("method")
    # The decorated method does not need a self argument.
    def known_method(cls, value: str) -> str:  # noqa: N805 pylint: disable=no-self-argument
        """Validate the fitting method.

        Args:
            value: The method name.

        Returns:
            The lower-cased method name.

        Raises:
            ValueError: if the method is unknown.
        """
        if value.lower() not in METHODS:
            raise ValueError(f"Unknown method {value}, expected one of {', '.join(METHODS)}.")
        return value.lower()

    @validator("jacobian")
    def known_jacobian(cls, value: str) -> str:  # noqa: N805 pylint: disable=no-self-argument
        """Validate the Jacobian mode.

        Args:
            value: The mode.

        Returns:
            The mode.

        Raises:
            ValueError: if the mode is unknown.
        """
        if value not in JACOBIANS:
            raise ValueError(f"Unknown jacobian {value}, expected one of {', '.join(JACOBIANS)}.")
        return value

    @root_validator(skip_on_failure=True)
    def validate_fit_order(  # pylint: disable=no-self-argument
        cls: "FitSettings", values: dict  # noqa: N805
    ) -> dict:
        """Validate the optimization order against the model order.

        Args:
            values: The value keys of the model.

        Returns:
            A dictionary validated values.

        Raises:
            ValueError: if the optimization order is below k.
        """
        fit_order = values.get("fit_order")
        if fit_order is not None and fit_order < values["k"]:
            raise ValueError(f"fit_order {fit_order} must not be below k={values['k']}.")
        return values


class TransientSettings(BaseModel):
    """Transient truncation parameters.

    Attributes:
        window_fraction: Sliding window length as a fraction of the trajectory.
        window: Sliding window length in samples; overrides window_fraction.
        prominence: Peak prominence as a fraction of the largest power.
        max_fraction: Largest fraction of a trajectory that may be cut.
    """

    window_fraction: float = Field(0.25, gt=0, le=1)
    window: typing.Optional[int] = Field(None, ge=8)
    prominence: float = Field(0.1, gt=0, lt=1)
    max_fraction: float = Field(0.8, gt=0, lt=1)


class ContinuationSettings(BaseModel):
    """Pseudo-arclength continuation parameters.

    Attributes:
        initial_step: First step, in forcing frequency.
        min_step: Step size below which the branch is truncated.
        max_step: Largest arclength step.
        newton_tol: Periodicity residual tolerance.
        max_newton: Newton iterations per point.
        max_points: Largest number of branch points.
        samples: Samples per period for amplitude measurement.
    """

    initial_step: float = Field(0.002, gt=0)
    min_step: float = Field(1e-6, gt=0)
    max_step: float = Field(0.02, gt=0)
    newton_tol: float = Field(1e-9, gt=0)
    max_newton: int = Field(25, ge=1)
    max_points: int = Field(2000, ge=2)
    samples: int = Field(256, ge=8)

    @root_validator(skip_on_failure=True)
    def validate_steps(  # pylint: disable=no-self-argument
        cls: "ContinuationSettings", values: dict  # noqa: N805
    ) -> dict:
        """Validate the step bounds.

        Args:
            values: The value keys of the model.

        Returns:
            A dictionary validated values.

        Raises:
            ValueError: if the bounds are inconsistent.
        """
        if not values["min_step"] <= values["initial_step"] <= values["max_step"]:
            raise ValueError("Steps must satisfy min_step <= initial_step <= max_step.")
        return values


class RunConfig(BaseModel):  # pylint: disable=too-few-public-methods
    """A complete command description.

    Attributes:
        command: Command to run.
        inputs: Input trajectory CSV paths.
        output: Output path (file or directory, depending on the command).
        model: Model file path.
        truth: Reference trajectory CSV for error columns.
        system: Testbed system name.
        parameters: Testbed parameter overrides.
        x0: Initial state.
        t: Simulated or predicted time span.
        dt: Output sampling step.
        count: Number of random initial conditions for batch simulation.
        radius: Radius of random initial conditions.
        seed: Random seed.
        fit: Fitting parameters.
        transients: Transient truncation parameters, applied when truncate is set.
        truncate: Whether to truncate transients before fitting.
        continuation: Continuation parameters.
        epsilons: Forcing amplitudes.
        omega_range: Forcing frequency window, "start-end".
        forcing: Forcing vector in reduced coordinates.
        validity_tol: Relative round-trip tolerance.
        workers: Worker threads for independent tasks.
    """

    command: str
    inputs: list[str] = []
    output: str = "-"
    model: typing.Optional[str] = None
    truth: typing.Optional[str] = None
    system: typing.Optional[str] = None
    parameters: dict[str, float] = {}
    x0: typing.Optional[list[float]] = None
    t: float = Field(100.0, gt=0)
    dt: float = Field(0.1, gt=0)
    count: int = Field(1, ge=1)
    radius: float = Field(0.3, gt=0)
    seed: int = 0
    fit: FitSettings = FitSettings()
    transients: TransientSettings = TransientSettings()
    truncate: bool = False
    continuation: ContinuationSettings = ContinuationSettings()
    epsilons: list[float] = [0.001]
    omega_range: str = "1.2-1.6"
    forcing: typing.Optional[list[float]] = None
    validity_tol: float = Field(1e-4, gt=0)
    workers: int = Field(1, ge=1)

    @validator("command")
    def known_command(cls, value: str) -> str:  # noqa: N805 pylint: disable=no-self-argument
        """Validate the command name.

        Args:
            value: The command.

        Returns:
            The command.

        Raises:
            ValueError: if the command is unknown.
        """
        if value not in COMMANDS:
            raise ValueError(f"Unknown command {value}.")
        return value

    @validator("epsilons", each_item=True)
    def non_negative_epsilon(  # noqa: N805 pylint: disable=no-self-argument
        cls, value: float
    ) -> float:
        """Validate forcing amplitudes.

        Args:
            value: A forcing amplitude.

        Returns:
            The amplitude.

        Raises:
            ValueError: if the amplitude is negative.
        """
        if value < 0:
            raise ValueError("Forcing amplitudes must be non-negative.")
        return value

    @root_validator(skip_on_failure=True)
    def validate_consistency(  # pylint: disable=no-self-argument
        cls: "RunConfig", values: dict  # noqa: N805
    ) -> dict:
        """Validate cross-field requirements of each command.

        Args:
            values: The value keys of the model.

        Returns:
            A dictionary validated values.

        Raises:
            ValueError: if a command misses a required input.
        """
        command = values["command"]
        if command in MODEL_COMMANDS and not values.get("model"):
            raise ValueError(f"Command {command} requires a model file.")
        if command in INPUT_COMMANDS and not values.get("inputs"):
            raise ValueError(f"Command {command} requires input trajectories.")
        if command == "simulate" and not values.get("system"):
            raise ValueError("Command simulate requires a system name.")
        if command == "frc":
            FrequencyRange.from_str(values["omega_range"])
        return values

    @property
    def frequency_range(self) -> FrequencyRange:
        """Parsed forcing frequency window.

        Returns:
            The frequency range.
        """
        return FrequencyRange.from_str(self.omega_range)

    @classmethod
    def from_sources(
        cls,
        command: str,
        flags: typing.Mapping[str, typing.Any],
        path: typing.Optional[Path] = None,
    ) -> "RunConfig":
        """Merge defaults, a config file and command-line flags, in increasing precedence.

        Args:
            command: The command name.
            flags: Flag values; None means not given.
            path: Optional YAML or JSON run description.

        Returns:
            The validated configuration.

        Raises:
            ConfigInvalidError: if the merged configuration is invalid.
        """
        merged: dict[str, typing.Any] = load_config_file(path) if path else {}
        _deep_update(merged, {key: value for key, value in flags.items() if value is not None})
        merged["command"] = command
        try:
            return cls(**merged)
        except (ValidationError, InvalidFrequencyRangeError) as exc:
            logger.error("Invalid run configuration, %s", exc)
            raise ConfigInvalidError(f"Invalid run configuration: {exc}") from exc


def _deep_update(target: dict, updates: typing.Mapping[str, typing.Any]) -> None:
    """Recursively merge updates into target, skipping None leaves.

    Args:
        target: Dictionary updated in place.
        updates: New values.
    """
    for key, value in updates.items():
        if isinstance(value, typing.Mapping) and isinstance(target.get(key), dict):
            _deep_update(target[key], value)
        elif isinstance(value, typing.Mapping):
            target[key] = {k: v for k, v in value.items() if v is not None}
        elif value is not None:
            target[key] = value


def load_config_file(path: Path) -> dict:
    """Read a YAML or JSON run description.

    Args:
        path: File path.

    Returns:
        The parsed mapping.

    Raises:
        ConfigInvalidError: if the file cannot be read or is not a mapping.
    """
    try:
        content = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        logger.error("Failed to read config file %s, %s", path, exc)
        raise ConfigInvalidError(f"Failed to read config file {path}.") from exc
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigInvalidError(f"Config file {path} must contain a mapping.")
    return content
