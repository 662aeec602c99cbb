# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command-line front end.

Every command writes plot-ready CSV (or JSON for models) to --output, "-" meaning stdout.
Exit codes: 0 on success, 1 on numerical failures, 2 on usage or input errors.
"""

import argparse
import concurrent.futures
import json
import logging
import sys
import typing
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import linalg

import ddl
import forcedresp
import linfit
import modelfile
import reduce
import testbed
from basis import BasisError
from config import ConfigInvalidError, RunConfig
from ddl import DdlError, DdlModel
from foliate import FoliationError
from forcedresp import ForcedResponseError, ForcedReducedModel
from linfit import LinearFitError, LinearModel
from modelfile import ModelFileError
from reduce import CsvFormatError, ReduceError, TrajectorySet
from series import SeriesError
from testbed import TestbedError, UnknownSystemError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2
FLOAT_FORMAT = "%.17g"

_FIT_FLAGS = (
    "method",
    "d",
    "k",
    "fit_order",
    "nu",
    "tol",
    "max_iter",
    "stride",
    "jacobian",
)
_TRANSIENT_FLAGS = ("window", "prominence")
_CONTINUATION_FLAGS = ("initial_step", "max_step", "max_points")


class CliUsageError(Exception):
    """Exception raised when a command cannot run with the given inputs.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the CliUsageError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


USAGE_ERRORS = (
    CliUsageError,
    ConfigInvalidError,
    CsvFormatError,
    ModelFileError,
    UnknownSystemError,
)
NUMERICAL_ERRORS = (
    BasisError,
    DdlError,
    FoliationError,
    ForcedResponseError,
    LinearFitError,
    ReduceError,
    SeriesError,
    TestbedError,
)


def _floats(value: str) -> list[float]:
    """Parse a comma-separated list of numbers.

    Args:
        value: Flag text such as "1.3,0".

    Returns:
        The numbers.

    Raises:
        ArgumentTypeError: if an item is not a number.
    """
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Expected numbers, got {value}.") from exc


def _parameters(value: str) -> dict[str, float]:
    """Parse name=value pairs.

    Args:
        value: Flag text such as "d=0.02,omega=1.4".

    Returns:
        The parameter mapping.

    Raises:
        ArgumentTypeError: if a pair is malformed.
    """
    result = {}
    for item in filter(None, (part.strip() for part in value.split(","))):
        name, _, number = item.partition("=")
        try:
            result[name.strip()] = float(number)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"Expected name=value pairs, got {item}.") from exc
    return result


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser.

    Flags default to None so that a config file value is only overridden when given.

    Returns:
        The parser.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON run description")
    common.add_argument("--log-level", default="INFO", help="Logging level (default INFO)")
    common.add_argument("-o", "--output", help="Output path, '-' for stdout")
    common.add_argument("--workers", type=int, help="Worker threads for independent tasks")

    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--system", help="Testbed system name")
    system.add_argument("--parameters", type=_parameters, help="System overrides, name=value")

    fitting = argparse.ArgumentParser(add_help=False)
    fitting.add_argument("inputs", nargs="*", help="Trajectory CSV files")
    fitting.add_argument("--method", help="dmd, edmd or ddl")
    fitting.add_argument("-d", type=int, help="Reduced dimension")
    fitting.add_argument("-k", type=int, help="Polynomial order")
    fitting.add_argument(
        "--fit-order", dest="fit_order", type=int, help="Optimization order truncated to -k"
    )
    fitting.add_argument("--nu", type=float, help="Weight of the round-trip cost")
    fitting.add_argument("--tol", type=float, help="Optimizer cost tolerance")
    fitting.add_argument("--max-iter", dest="max_iter", type=int, help="Optimizer steps")
    fitting.add_argument("--stride", type=int, help="Snapshot pair shift in samples")
    fitting.add_argument("--jacobian", help="analytic or finite-difference")
    fitting.add_argument("--truncate", action="store_true", default=None, help="Cut transients")
    fitting.add_argument("--window", type=int, help="Transient window in samples")
    fitting.add_argument("--prominence", type=float, help="Transient peak prominence")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", help="Model file")

    parser = argparse.ArgumentParser(
        prog="ddl", description="Data-driven linearization of nonlinear dynamics."
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    simulate = commands.add_parser("simulate", parents=[common, system], help="Simulate")
    simulate.add_argument("--x0", type=_floats, help="Initial state, comma-separated")
    simulate.add_argument("--t", type=float, help="Time span (iterations for maps)")
    simulate.add_argument("--dt", type=float, help="Output sampling step")
    simulate.add_argument("--count", type=int, help="Random initial conditions")
    simulate.add_argument("--radius", type=float, help="Initial condition radius")
    simulate.add_argument("--seed", type=int, help="Random seed")

    commands.add_parser("fit", parents=[common, fitting], help="Fit a model")

    predict = commands.add_parser("predict", parents=[common, model], help="Predict")
    predict.add_argument("--x0", type=_floats, help="Initial observables")
    predict.add_argument("--t", type=float, help="Prediction time span")
    predict.add_argument("--truth", help="Reference trajectory CSV")

    frc = commands.add_parser("frc", parents=[common, model, system], help="Forced response")
    frc.add_argument("--epsilons", type=_floats, help="Forcing amplitudes")
    frc.add_argument("--omega-range", dest="omega_range", help="Frequency window, start-end")
    frc.add_argument("--forcing", type=_floats, help="Forcing vector in model coordinates")
    frc.add_argument("--initial-step", dest="initial_step", type=float, help="First step")
    frc.add_argument("--max-step", dest="max_step", type=float, help="Largest step")
    frc.add_argument("--max-points", dest="max_points", type=int, help="Point budget")

    compare = commands.add_parser("compare", parents=[common, fitting], help="Compare")
    compare.add_argument("--truth", help="Held-out trajectory CSV")

    commands.add_parser("spectrum", parents=[common, model], help="Model eigenvalues")

    validity = commands.add_parser("validity", parents=[common, model], help="Validity domain")
    validity.add_argument("--validity-tol", dest="validity_tol", type=float, help="Tolerance")
    validity.add_argument("--radius", type=float, help="Sample radius for hull-less models")
    validity.add_argument("--seed", type=int, help="Random seed")
    return parser


def _flags(args: argparse.Namespace) -> dict[str, typing.Any]:
    """Arrange parsed flags like a run description.

    Args:
        args: Parsed arguments.

    Returns:
        Nested flag mapping; absent flags are None.
    """
    values = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config", "log_level")
    }
    if values.get("inputs") == []:
        values["inputs"] = None
    flags: dict[str, typing.Any] = {
        key: value
        for key, value in values.items()
        if key not in _FIT_FLAGS + _TRANSIENT_FLAGS + _CONTINUATION_FLAGS
    }
    flags["fit"] = {key: values.get(key) for key in _FIT_FLAGS}
    flags["transients"] = {key: values.get(key) for key in _TRANSIENT_FLAGS}
    flags["continuation"] = {key: values.get(key) for key in _CONTINUATION_FLAGS}
    return flags


def _write_frame(frame: pd.DataFrame, output: str) -> None:
    """Write a table to a path or stdout.

    Args:
        frame: The table.
        output: Path or "-".
    """
    if output == "-":
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
        return
    frame.to_csv(output, index=False, float_format=FLOAT_FORMAT)
    logger.info("Wrote %s rows to %s", len(frame), output)


def _read_inputs(paths: typing.Sequence[str]) -> TrajectorySet:
    """Read and merge trajectory files.

    Args:
        paths: CSV paths.

    Returns:
        All trajectories in one set.

    Raises:
        CsvFormatError: if the files disagree in dimension or sampling.
    """
    sets = [reduce.read_csv(path) for path in paths]
    trajectories = tuple(trajectory for item in sets for trajectory in item.trajectories)
    try:
        return TrajectorySet(trajectories=trajectories, dt=sets[0].dt)
    except reduce.InconsistentSamplingError as exc:
        raise CsvFormatError(f"Input files do not combine: {exc.msg}") from exc


def _prepare(config: RunConfig, traj: TrajectorySet) -> TrajectorySet:
    """Truncate transients and reduce the dimension as configured.

    Args:
        config: Run configuration.
        traj: Raw trajectories.

    Returns:
        Trajectories ready for fitting.
    """
    dim = config.fit.d or traj.dim
    if config.truncate:
        traj = reduce.truncate_transients(traj, dim, config.transients)
    if dim != traj.dim:
        embedding, traj = reduce.svd_reduce(traj, dim)
        logger.info(
            "Reduced %s to %s dimensions, residual energy %s",
            embedding.projection.shape[1],
            dim,
            embedding.residual_energy,
        )
    return traj


def _fit_model(config: RunConfig, traj: TrajectorySet, method: str) -> modelfile.Model:
    """Fit one model type.

    Args:
        config: Run configuration.
        traj: Prepared trajectories.
        method: dmd, edmd or ddl.

    Returns:
        The fitted model.
    """
    settings = config.fit
    pairs = reduce.snapshot_pairs(traj, settings.stride)
    if method == linfit.DMD:
        return linfit.fit_dmd(pairs, settings.svd_rtol)
    if method == linfit.EDMD:
        return linfit.fit_edmd(pairs, settings.k, settings.svd_rtol)
    model, _ = ddl.fit(
        pairs,
        settings.fit_order or settings.k,
        nu=settings.nu,
        tol=settings.tol,
        max_iter=settings.max_iter,
        jacobian=settings.jacobian,
        rtol=settings.svd_rtol,
    )
    return ddl.truncate(model, settings.k)


def _predict(model: modelfile.Model, phi0: np.ndarray, steps: int) -> np.ndarray:
    """Predict with any model type.

    Args:
        model: The model.
        phi0: Initial observables.
        steps: Number of steps.

    Returns:
        d×(steps+1) prediction.
    """
    if isinstance(model, DdlModel):
        return ddl.predict(model, phi0, steps)
    return linfit.predict(model, phi0, steps)


def _eigenvalues(model: modelfile.Model) -> np.ndarray:
    """Discrete-time eigenvalues of the linear part.

    Args:
        model: The model.

    Returns:
        Sorted eigenvalues.
    """
    if isinstance(model, DdlModel):
        return linfit.sort_eigenvalues(linalg.eigvals(model.B))
    return linfit.spectrum(model)


def cmd_simulate(config: RunConfig) -> None:
    """Simulate a testbed system and write its observables.

    Args:
        config: Run configuration.
    """
    assert config.system is not None  # nosec
    spec = testbed.get_system(config.system, config.parameters)
    if config.x0 is not None:
        initial = np.array(config.x0, dtype=float)[:, None]
    else:
        initial = testbed.sample_initial_conditions(
            spec, config.count, config.radius, config.seed
        )

    def run(x0: np.ndarray) -> reduce.Trajectory:
        if spec.kind == testbed.MAP:
            trajectory = testbed.iterate(spec, x0, int(round(config.t)))
        else:
            trajectory = testbed.integrate(spec, x0, config.t, config.dt)
        return reduce.Trajectory(
            time=trajectory.time, states=testbed.to_observables(spec, trajectory.states)
        )

    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as executor:
        trajectories = tuple(executor.map(run, initial.T))
    dt = 1.0 if spec.kind == testbed.MAP else config.dt
    traj = TrajectorySet(trajectories=trajectories, dt=dt)
    logger.info("Simulated %s trajectory(ies) of %s", len(trajectories), spec.name)
    _write_frame(reduce.to_frame(traj), config.output)


def _report(model: modelfile.Model) -> dict[str, typing.Any]:
    """Fit report of any model type.

    Args:
        model: The model.

    Returns:
        JSON-ready report.
    """
    eigenvalues = [[value.real, value.imag] for value in _eigenvalues(model)]
    if isinstance(model, DdlModel):
        report = modelfile.dump_model(model)["report"] or {}
        return {"kind": "ddl", "eigenvalues": eigenvalues, **report}
    return {
        "kind": model.kind,
        "eigenvalues": eigenvalues,
        "rank": model.rank,
        "warnings": list(model.warnings),
    }


def cmd_fit(config: RunConfig) -> None:
    """Fit a model to trajectory files and write the model and its report.

    Args:
        config: Run configuration.

    Raises:
        CliUsageError: if the model would be written to stdout.
    """
    if config.output == "-":
        raise CliUsageError("Command fit requires an output model path.")
    traj = _prepare(config, _read_inputs(config.inputs))
    model = _fit_model(config, traj, config.fit.method)
    output = Path(config.output)
    modelfile.save_model(model, output)
    report_path = output.with_suffix(".report.json")
    report_path.write_text(json.dumps(_report(model), indent=1), encoding="utf-8")
    logger.info("Fit report written to %s", report_path)


def cmd_predict(config: RunConfig) -> None:
    """Predict a trajectory from a model file.

    With a reference trajectory, the prediction starts at its first sample, covers its
    length and carries a per-step error column.

    Args:
        config: Run configuration.

    Raises:
        CliUsageError: if no initial state is available.
    """
    assert config.model is not None  # nosec
    model = modelfile.load_model(Path(config.model))
    extra = {}
    if config.truth:
        truth = reduce.read_csv(config.truth).trajectories[0]
        phi0 = np.array(config.x0) if config.x0 is not None else truth.states[:, 0]
        prediction = _predict(model, phi0, truth.length - 1)
        extra["error"] = linfit.trajectory_error(truth.states, prediction).pointwise
    elif config.x0 is not None:
        prediction = _predict(model, np.array(config.x0), int(round(config.t / model.dt)))
    else:
        raise CliUsageError("Command predict requires --x0 or --truth.")
    traj = TrajectorySet.from_arrays([prediction], model.dt)
    _write_frame(reduce.to_frame(traj, extra), config.output)


def _forcing(config: RunConfig, dim: int) -> np.ndarray:
    """Forcing vector from the flags or the testbed system.

    Args:
        config: Run configuration.
        dim: Model dimension.

    Returns:
        The forcing vector.

    Raises:
        CliUsageError: if no forcing of the right size is given.
    """
    if config.forcing is not None:
        forcing = np.array(config.forcing, dtype=float)
    elif config.system:
        spec = testbed.get_system(config.system, config.parameters)
        if "forcing" not in spec.metadata:
            raise CliUsageError(f"System {spec.name} declares no forcing vector.")
        forcing = np.asarray(spec.metadata["forcing"], dtype=float)
    else:
        raise CliUsageError("Command frc requires --forcing or --system.")
    if forcing.size != dim:
        raise CliUsageError(f"Forcing vector has {forcing.size} entries, expected {dim}.")
    return forcing


def cmd_frc(config: RunConfig) -> None:
    """Compute one forced response branch per forcing amplitude.

    DDL models are continued by shooting; DMD models use the closed-form linear response.
    A directory output receives frc_<ε>.csv and frc_<ε>.json (orbit anchors) per amplitude;
    stdout receives all branches in one table.

    Args:
        config: Run configuration.

    Raises:
        CliUsageError: if the model type has no forced response.
    """
    assert config.model is not None  # nosec
    model = modelfile.load_model(Path(config.model))
    if isinstance(model, LinearModel) and model.kind != linfit.DMD:
        raise CliUsageError("Forced responses need a DMD or DDL model.")
    forcing = _forcing(config, model.dim)
    omega_range = config.frequency_range

    def branch(epsilon: float) -> forcedresp.FrcBranch:
        if isinstance(model, DdlModel):
            forced = ForcedReducedModel.from_ddl(model, forcing)
            return forcedresp.continue_frc(forced, omega_range, epsilon, config.continuation)
        generator = linfit.continuous_generator(model)
        return forcedresp.dmd_frc(
            generator, forcing, epsilon, omega_range, config.continuation.initial_step
        )

    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as executor:
        branches = list(executor.map(branch, config.epsilons))
    if config.output == "-":
        frames = [item.to_frame().assign(epsilon=item.epsilon) for item in branches]
        _write_frame(pd.concat(frames, ignore_index=True), "-")
        return
    directory = Path(config.output)
    directory.mkdir(parents=True, exist_ok=True)
    for item in branches:
        stem = f"frc_{item.epsilon:g}"
        _write_frame(item.to_frame(), str(directory / f"{stem}.csv"))
        (directory / f"{stem}.json").write_text(json.dumps(item.anchors()), encoding="utf-8")


def cmd_compare(config: RunConfig) -> None:
    """Fit DMD, EDMD and DDL on the same data and compare held-out predictions.

    The held-out trajectory is --truth, or the last input trajectory when absent.

    Args:
        config: Run configuration.

    Raises:
        CliUsageError: if there is nothing to hold out.
    """
    traj = _read_inputs(config.inputs)
    if config.truth:
        held_out = reduce.read_csv(config.truth).trajectories[0]
    elif len(traj.trajectories) > 1:
        held_out = traj.trajectories[-1]
        traj = TrajectorySet(trajectories=traj.trajectories[:-1], dt=traj.dt)
    else:
        raise CliUsageError("Command compare needs --truth or at least two trajectories.")
    traj = _prepare(config, traj)
    rows = []
    for method in (linfit.DMD, linfit.EDMD, modelfile.DDL):
        model = _fit_model(config, traj, method)
        prediction = _predict(model, held_out.states[:, 0], held_out.length - 1)
        error = linfit.trajectory_error(held_out.states, prediction)
        rows.append(
            {
                "method": method,
                "max_error": error.max_error,
                "mean_error": error.mean_error,
                "normalized_max_error": error.normalized_max_error,
                "normalized_mean_error": error.normalized_mean_error,
            }
        )
        logger.info("%s held-out max error %s", method, error.max_error)
    _write_frame(pd.DataFrame(rows), config.output)


def cmd_spectrum(config: RunConfig) -> None:
    """Write the model eigenvalues with rates, frequencies and damping ratios.

    Args:
        config: Run configuration.
    """
    assert config.model is not None  # nosec
    model = modelfile.load_model(Path(config.model))
    summary = linfit.modal_summary(_eigenvalues(model), model.dt)
    _write_frame(
        pd.DataFrame(
            summary, columns=["real", "imag", "modulus", "rate", "frequency", "damping"]
        ),
        config.output,
    )


def cmd_validity(config: RunConfig) -> None:
    """Write sampled round-trip errors of a DDL model and the radius estimate.

    Samples come from the training hull, or a ball of --radius for analytic models.

    Args:
        config: Run configuration.

    Raises:
        CliUsageError: if the model is not a DDL model.
    """
    assert config.model is not None  # nosec
    model = modelfile.load_model(Path(config.model))
    if not isinstance(model, DdlModel):
        raise CliUsageError("Validity domains need a DDL model.")
    if model.hull is not None:
        samples = model.hull.sample(ddl.HULL_SAMPLES, config.seed)
    else:
        rng = np.random.default_rng(config.seed)
        directions = rng.standard_normal((model.dim, ddl.HULL_SAMPLES))
        directions /= np.linalg.norm(directions, axis=0)
        samples = directions * config.radius * rng.uniform(size=ddl.HULL_SAMPLES)
    domain = ddl.validity_domain(model, samples, config.validity_tol)
    logger.info("Validity radius %s", domain.radius)
    frame = pd.DataFrame(samples.T, columns=[f"phi_{i + 1}" for i in range(model.dim)])
    frame["error"] = domain.errors
    frame["valid"] = domain.mask
    frame["radius"] = domain.radius
    _write_frame(frame, config.output)


HANDLERS: dict[str, typing.Callable[[RunConfig], None]] = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "frc": cmd_frc,
    "compare": cmd_compare,
    "spectrum": cmd_spectrum,
    "validity": cmd_validity,
}


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """Run one command.

    Args:
        argv: Arguments without the program name; sys.argv when absent.

    Returns:
        The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = RunConfig.from_sources(args.command, _flags(args), args.config)
        HANDLERS[config.command](config)
    except USAGE_ERRORS as exc:
        logger.error("%s", exc.msg)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        logger.error("%s", getattr(exc, "msg", exc))
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: nocover
    sys.exit(main())
