# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Turn raw time series into reduced coordinates and snapshot pairs."""

import dataclasses
import math
import logging
import typing
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import linalg, signal

from config import TransientSettings
from linfit import SnapshotPairs

logger = logging.getLogger(__name__)

SAMPLING_RTOL = 1e-9
DEFAULT_RANK_RTOL = 1e-10
TIME_COLUMN = "t"
TRAJECTORY_COLUMN = "trajectory"
STATE_PREFIX = "phi_"


class ReduceError(Exception):
    """Represents an error while preparing trajectory data."""


class _MessageError(ReduceError):
    """Reduce error carrying an explanation.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the error.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class SeriesTooShortError(_MessageError):
    """Represents a series too short for the requested operation."""


class InconsistentSamplingError(_MessageError):
    """Represents non-uniform or non-increasing time stamps."""


class TransientTruncationError(_MessageError):
    """Represents a trajectory whose transients could not be located."""


class InsufficientRankError(_MessageError):
    """Represents data with fewer meaningful directions than requested."""


class CsvFormatError(_MessageError):
    """Represents a malformed trajectory CSV file."""


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """One sampled trajectory.

    Attributes:
        time: Strictly increasing time stamps, length T.
        states: d×T samples.
    """

    time: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        """Coerce and check the arrays.

        Raises:
            InconsistentSamplingError: if the shapes disagree or time does not increase.
        """
        time = np.asarray(self.time, dtype=float).ravel()
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if states.shape[1] != time.size:
            raise InconsistentSamplingError(
                f"{time.size} time stamps for {states.shape[1]} samples."
            )
        if np.any(np.diff(time) <= 0):
            raise InconsistentSamplingError("Time stamps must be strictly increasing.")
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "states", states)

    @property
    def length(self) -> int:
        """Number of samples.

        Returns:
            T.
        """
        return self.time.size


@dataclasses.dataclass(frozen=True)
class TrajectorySet:
    """Trajectories sharing one dimension and one uniform sampling step.

    Attributes:
        trajectories: The trajectories.
        dt: Sampling step.
        labels: Optional trajectory names.
    """

    trajectories: tuple[Trajectory, ...]
    dt: float
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Check dimensions and sampling.

        Raises:
            InconsistentSamplingError: if the set is empty, mixes dimensions or the steps
                differ from dt.
        """
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.trajectories:
            raise InconsistentSamplingError("A trajectory set needs at least one trajectory.")
        if not self.dt > 0:
            raise InconsistentSamplingError(f"Sampling step must be positive, got {self.dt}.")
        if len({trajectory.states.shape[0] for trajectory in self.trajectories}) > 1:
            raise InconsistentSamplingError("Trajectories have different dimensions.")
        if self.labels and len(self.labels) != len(self.trajectories):
            raise InconsistentSamplingError("One label per trajectory is required.")
        for trajectory in self.trajectories:
            steps = np.diff(trajectory.time)
            if steps.size and np.max(np.abs(steps - self.dt)) > SAMPLING_RTOL * self.dt:
                raise InconsistentSamplingError(
                    f"Non-uniform sampling: steps deviate from dt={self.dt}."
                )

    @classmethod
    def from_arrays(
        cls,
        states: typing.Sequence[np.ndarray],
        dt: float,
        t0: float = 0.0,
        labels: typing.Sequence[str] = (),
    ) -> "TrajectorySet":
        """Build a set from sample matrices with time starting at t0.

        Args:
            states: d×T matrices (vectors are read as d=1).
            dt: Sampling step.
            t0: Time of the first sample.
            labels: Optional names.

        Returns:
            The trajectory set.
        """
        trajectories = []
        for block in states:
            block = np.atleast_2d(np.asarray(block, dtype=float))
            time = t0 + dt * np.arange(block.shape[1])
            trajectories.append(Trajectory(time=time, states=block))
        return cls(trajectories=tuple(trajectories), dt=dt, labels=tuple(labels))

    @property
    def dim(self) -> int:
        """State dimension.

        Returns:
            d.
        """
        return self.trajectories[0].states.shape[0]

    def stacked(self) -> np.ndarray:
        """All samples side by side.

        Returns:
            d×N matrix.
        """
        return np.hstack([trajectory.states for trajectory in self.trajectories])

    def with_states(self, states: typing.Sequence[np.ndarray]) -> "TrajectorySet":
        """Replace the samples while keeping time stamps and labels.

        Args:
            states: One matrix per trajectory with unchanged sample counts.

        Returns:
            The new set.
        """
        trajectories = tuple(
            Trajectory(time=trajectory.time, states=block)
            for trajectory, block in zip(self.trajectories, states)
        )
        return TrajectorySet(trajectories=trajectories, dt=self.dt, labels=self.labels)

    def truncated(self, starts: typing.Sequence[int]) -> "TrajectorySet":
        """Drop the leading samples of every trajectory.

        Args:
            starts: First kept index per trajectory.

        Returns:
            The truncated set.
        """
        trajectories = tuple(
            Trajectory(time=trajectory.time[start:], states=trajectory.states[:, start:])
            for trajectory, start in zip(self.trajectories, starts)
        )
        return TrajectorySet(trajectories=trajectories, dt=self.dt, labels=self.labels)


@dataclasses.dataclass(frozen=True)
class ReducedEmbedding:
    """Delay embedding followed by a linear projection.

    Attributes:
        delay_dim: Number of delayed copies.
        lag: Delay in samples.
        projection: d×d_embed matrix with orthonormal rows.
        singular_values: All singular values of the centered embedded data.
        offset: Subtracted reference state (data mean or fixed point).
    """

    delay_dim: int
    lag: int
    projection: np.ndarray
    singular_values: np.ndarray
    offset: np.ndarray

    @property
    def dim(self) -> int:
        """Reduced dimension.

        Returns:
            d.
        """
        return self.projection.shape[0]

    @property
    def residual_energy(self) -> float:
        """Fraction of the data energy in the discarded directions.

        Returns:
            Sum of the discarded squared singular values over the total.
        """
        energy = self.singular_values**2
        total = float(energy.sum())
        return float(energy[self.dim :].sum()) / total if total else 0.0

    def project(self, states: np.ndarray) -> np.ndarray:
        """Reduce embedded states.

        Args:
            states: d_embed×m states.

        Returns:
            d×m reduced coordinates.
        """
        return self.projection @ (np.atleast_2d(states) - self.offset[:, None])


def delay_embed(series: np.ndarray, dim: int, lag: int = 1) -> np.ndarray:
    """Stack delayed copies of a series.

    Row block j holds the series shifted by j·lag samples.

    Args:
        series: Scalar series of length T or d×T matrix.
        dim: Number of copies.
        lag: Delay in samples.

    Returns:
        (dim·d)×(T − (dim−1)·lag) matrix.

    Raises:
        SeriesTooShortError: if no full column fits or dim, lag are not positive.
    """
    series = np.atleast_2d(np.asarray(series, dtype=float))
    if dim < 1 or lag < 1:
        raise SeriesTooShortError(f"Embedding needs dim >= 1 and lag >= 1, got {dim}, {lag}.")
    columns = series.shape[1] - (dim - 1) * lag
    if columns < 1:
        raise SeriesTooShortError(
            f"Series of {series.shape[1]} samples is too short for dim={dim}, lag={lag}."
        )
    return np.vstack([series[:, j * lag : j * lag + columns] for j in range(dim)])


def delay_embed_set(traj: TrajectorySet, dim: int, lag: int = 1) -> TrajectorySet:
    """Delay-embed every trajectory of a set.

    Args:
        traj: Trajectories.
        dim: Number of copies.
        lag: Delay in samples.

    Returns:
        The embedded set, time stamps of the leading copy.
    """
    trajectories = []
    for trajectory in traj.trajectories:
        embedded = delay_embed(trajectory.states, dim, lag)
        trajectories.append(
            Trajectory(time=trajectory.time[: embedded.shape[1]], states=embedded)
        )
    return TrajectorySet(trajectories=tuple(trajectories), dt=traj.dt, labels=traj.labels)


def _dominant_peaks(window: np.ndarray, prominence: float) -> int:
    """Count dominant peaks in the summed power spectrum of a d×n window.

    Args:
        window: Samples.
        prominence: Minimum prominence as a fraction of the largest power.

    Returns:
        Number of peaks.
    """
    _, power = signal.periodogram(
        window, window="blackman", nfft=4 * window.shape[1], detrend="constant", axis=-1
    )
    total = np.atleast_2d(power).sum(axis=0)
    top = float(total.max(initial=0.0))
    if top <= 0:
        return 0
    peaks, _ = signal.find_peaks(total, prominence=prominence * top)
    return int(peaks.size)


def _transient_start(
    states: np.ndarray, target: int, params: TransientSettings
) -> typing.Optional[int]:
    """First window start whose spectrum has the target number of peaks.

    Args:
        states: d×T samples.
        target: Number of dominant peaks.
        params: Truncation parameters.

    Returns:
        The start index, or None when no admissible window qualifies.
    """
    length = states.shape[1]
    window = params.window or max(8, int(params.window_fraction * length))
    if window > length:
        return None
    step = max(1, window // 8)
    last = min(int(params.max_fraction * length), length - window)
    for start in range(0, last + 1, step):
        if _dominant_peaks(states[:, start : start + window], params.prominence) == target:
            return start
    return None


def truncate_transients(
    traj: TrajectorySet, d: int, params: typing.Optional[TransientSettings] = None
) -> TrajectorySet:
    """Cut the initial transients that carry more frequencies than a d-dimensional model.

    Every trajectory starts at the earliest sliding window whose power spectrum has ⌈d/2⌉
    dominant peaks: one per oscillatory mode pair and one for a leftover real mode.

    Args:
        traj: Trajectories.
        d: Target model dimension.
        params: Window, prominence and maximal cut fraction.

    Returns:
        The truncated set.

    Raises:
        TransientTruncationError: if a trajectory never shows the expected spectrum.
    """
    params = params or TransientSettings()
    target = math.ceil(d / 2)
    starts = []
    for index, trajectory in enumerate(traj.trajectories):
        start = _transient_start(trajectory.states, target, params)
        if start is None:
            raise TransientTruncationError(
                f"Trajectory {index} never shows {target} dominant frequencies within the "
                f"first {params.max_fraction:.0%}; pass a manual start index instead."
            )
        logger.info("Trajectory %s truncated at sample %s", index, start)
        starts.append(start)
    return traj.truncated(starts)


def svd_reduce(
    traj: TrajectorySet,
    d: int,
    fixed_point: typing.Optional[np.ndarray] = None,
    rtol: float = DEFAULT_RANK_RTOL,
    delay_dim: int = 1,
    lag: int = 1,
) -> tuple[ReducedEmbedding, TrajectorySet]:
    """Project centered data onto its d leading singular directions.

    Args:
        traj: Trajectories, already delay-embedded when delay_dim > 1.
        d: Target dimension.
        fixed_point: Reference state; the data mean when absent.
        rtol: Singular values below rtol times the largest are not meaningful.
        delay_dim: Embedding dimension used to build traj, recorded for lifting.
        lag: Embedding lag used to build traj.

    Returns:
        The embedding and the reduced trajectories.

    Raises:
        InsufficientRankError: if fewer than d singular values are meaningful.
    """
    stacked = traj.stacked()
    offset = (
        stacked.mean(axis=1)
        if fixed_point is None
        else np.asarray(fixed_point, dtype=float).ravel()
    )
    left, singular_values, _ = linalg.svd(stacked - offset[:, None], full_matrices=False)
    meaningful = int(np.sum(singular_values > rtol * singular_values[0]))
    if singular_values[0] <= 0 or meaningful < d:
        raise InsufficientRankError(
            f"Data has {meaningful} meaningful directions, {d} requested."
        )
    embedding = ReducedEmbedding(
        delay_dim=delay_dim,
        lag=lag,
        projection=left[:, :d].T.copy(),
        singular_values=singular_values,
        offset=offset,
    )
    if embedding.residual_energy > 0.01:
        logger.warning(
            "Reduction discards %.2f%% of the data energy", 100 * embedding.residual_energy
        )
    reduced = traj.with_states([embedding.project(t.states) for t in traj.trajectories])
    return embedding, reduced


def lift(embedding: ReducedEmbedding, reduced: np.ndarray) -> np.ndarray:
    """Map reduced coordinates back into the embedded space.

    Args:
        embedding: The reduction.
        reduced: d×m reduced coordinates.

    Returns:
        d_embed×m states.
    """
    return embedding.projection.T @ np.atleast_2d(reduced) + embedding.offset[:, None]


def snapshot_pairs(traj: TrajectorySet, stride: int = 1) -> SnapshotPairs:
    """Concatenate (state, stride-forward state) pairs across trajectories.

    Args:
        traj: Trajectories.
        stride: Forward shift in samples.

    Returns:
        Snapshot pairs with step stride·dt.

    Raises:
        SeriesTooShortError: if stride is below one or a trajectory is not longer than it.
    """
    if stride < 1:
        raise SeriesTooShortError(f"Stride must be at least 1, got {stride}.")
    current, following = [], []
    for trajectory in traj.trajectories:
        if trajectory.length <= stride:
            raise SeriesTooShortError(
                f"Trajectory of {trajectory.length} samples is too short for stride {stride}."
            )
        current.append(trajectory.states[:, :-stride])
        following.append(trajectory.states[:, stride:])
    return SnapshotPairs(phi=np.hstack(current), phi_hat=np.hstack(following), dt=stride * traj.dt)


def estimate_derivatives(traj: TrajectorySet) -> TrajectorySet:
    """Second-order finite-difference time derivatives of every trajectory.

    Args:
        traj: Trajectories with at least three samples each.

    Returns:
        The derivatives on the same time stamps.

    Raises:
        SeriesTooShortError: if a trajectory has fewer than three samples.
    """
    rates = []
    for trajectory in traj.trajectories:
        if trajectory.length < 3:
            raise SeriesTooShortError("Derivatives need at least three samples.")
        rates.append(np.gradient(trajectory.states, traj.dt, axis=1, edge_order=2))
    return traj.with_states(rates)


def _state_columns(dim: int) -> list[str]:
    """CSV column names of the state.

    Args:
        dim: State dimension.

    Returns:
        phi_1 ... phi_d.
    """
    return [f"{STATE_PREFIX}{index}" for index in range(1, dim + 1)]


def to_frame(
    traj: TrajectorySet, extra: typing.Optional[typing.Mapping[str, np.ndarray]] = None
) -> pd.DataFrame:
    """Tabulate trajectories one row per sample.

    Args:
        traj: Trajectories.
        extra: Additional columns, one value per row.

    Returns:
        Frame with columns t, phi_1..phi_d, then trajectory when there are several, then extra.
    """
    frames = []
    for index, trajectory in enumerate(traj.trajectories):
        frame = pd.DataFrame(trajectory.states.T, columns=_state_columns(traj.dim))
        frame.insert(0, TIME_COLUMN, trajectory.time)
        if len(traj.trajectories) > 1:
            frame[TRAJECTORY_COLUMN] = traj.labels[index] if traj.labels else index
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    for name, values in (extra or {}).items():
        table[name] = np.asarray(values)
    return table


def write_csv(
    traj: TrajectorySet,
    path: typing.Union[str, Path, typing.TextIO],
    extra: typing.Optional[typing.Mapping[str, np.ndarray]] = None,
) -> None:
    """Write trajectories in the t,phi_1,...,phi_d format.

    Args:
        traj: Trajectories.
        path: Destination path or open text stream.
        extra: Additional columns, one value per row.
    """
    to_frame(traj, extra).to_csv(path, index=False, float_format="%.17g")
    logger.debug("Wrote %s trajectory(ies) to %s", len(traj.trajectories), path)


def read_csv(path: typing.Union[str, Path]) -> TrajectorySet:
    """Read trajectories in the t,phi_1,...,phi_d format.

    Args:
        path: Source file.

    Returns:
        The trajectories, grouped by the trajectory column when present.

    Raises:
        CsvFormatError: if the file is unreadable, the header is malformed, values are not
            numeric or the sampling is not uniform.
    """
    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        logger.error("Failed to read trajectory file %s, %s", path, exc)
        raise CsvFormatError(f"Failed to read trajectory file {path}.") from exc
    columns = list(table.columns)
    state_columns = [name for name in columns if name not in (TIME_COLUMN, TRAJECTORY_COLUMN)]
    expected = _state_columns(len(state_columns))
    if not columns or columns[0] != TIME_COLUMN or not state_columns or state_columns != expected:
        header = ",".join(map(str, columns))
        raise CsvFormatError(f"Malformed header {header} in {path}, expected t,phi_1,...,phi_d.")
    try:
        numeric = table[[TIME_COLUMN, *state_columns]].astype(float)
    except ValueError as exc:
        raise CsvFormatError(f"Non-numeric values in {path}.") from exc
    if TRAJECTORY_COLUMN in table.columns:
        groups = [
            (str(label), numeric.loc[rows.index])
            for label, rows in table.groupby(TRAJECTORY_COLUMN, sort=False)
        ]
    else:
        groups = [("0", numeric)]
    try:
        trajectories = tuple(
            Trajectory(
                time=group[TIME_COLUMN].to_numpy(),
                states=group[state_columns].to_numpy().T,
            )
            for _, group in groups
        )
        first = trajectories[0].time
        if first.size < 2:
            raise SeriesTooShortError(f"Trajectory in {path} has fewer than two samples.")
        dt = float(first[1] - first[0])
        labels = tuple(label for label, _ in groups) if len(groups) > 1 else ()
        return TrajectorySet(trajectories=trajectories, dt=dt, labels=labels)
    except (InconsistentSamplingError, SeriesTooShortError) as exc:
        logger.error("Invalid trajectory file %s, %s", path, exc)
        raise CsvFormatError(f"Invalid trajectory file {path}: {exc.msg}") from exc

