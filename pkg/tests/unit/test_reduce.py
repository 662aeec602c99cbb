# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Trajectory preprocessing module tests."""

from pathlib import Path

import numpy as np
import pytest

import linfit
import reduce
from config import TransientSettings
from linfit import SnapshotPairs
from reduce import TrajectorySet


def test_delay_embed():
    """
    arrange: given the series 0..9.
    act: when it is embedded with three copies and lag 2.
    assert: each row block is the series shifted by the lag.
    """
    embedded = reduce.delay_embed(np.arange(10.0), 3, 2)

    assert embedded.shape == (3, 6), "Unexpected embedding shape."
    np.testing.assert_array_equal(embedded[:, 0], [0.0, 2.0, 4.0])
    np.testing.assert_array_equal(embedded[2], np.arange(4.0, 10.0))


@pytest.mark.parametrize(
    "dim, lag",
    [
        pytest.param(6, 2, id="too many copies"),
        pytest.param(0, 1, id="no copies"),
        pytest.param(2, 0, id="zero lag"),
    ],
)
def test_delay_embed_invalid(dim: int, lag: int):
    """
    arrange: given a series of ten samples.
    act: when it is embedded with impossible parameters.
    assert: SeriesTooShortError is raised.
    """
    with pytest.raises(reduce.SeriesTooShortError):
        reduce.delay_embed(np.arange(10.0), dim, lag)


def test_delay_embed_sine_has_rank_two():
    """
    arrange: given a sampled sine.
    act: when it is embedded with six copies and its snapshot data diagnosed.
    assert: the embedding has rank 2.
    """
    series = np.sin(0.3 * np.arange(200))
    embedded = reduce.delay_embed(series, 6, 1)
    pairs = SnapshotPairs(phi=embedded[:, :-1], phi_hat=embedded[:, 1:], dt=1.0)

    diagnostics = linfit.data_diagnostics(pairs, 2)

    assert diagnostics.rank == 2, f"Unexpected rank {diagnostics.rank}."


def test_delay_embed_set_keeps_leading_time():
    """
    arrange: given a trajectory set of one two-dimensional trajectory.
    act: when the set is delay-embedded.
    assert: the dimension multiplies and the time stamps follow the leading copy.
    """
    traj = TrajectorySet.from_arrays([np.vstack([np.arange(8.0), -np.arange(8.0)])], 0.5)

    embedded = reduce.delay_embed_set(traj, 3)

    assert embedded.dim == 6, "Unexpected embedded dimension."
    np.testing.assert_array_equal(embedded.trajectories[0].time, 0.5 * np.arange(6))


def test_truncate_transients_cuts_fast_mode():
    """
    arrange: given a slow oscillation plus a faster decaying one.
    act: when transients are truncated for a two-dimensional model.
    assert: the trajectory starts once the fast mode has faded from the spectrum.
    """
    t = 0.05 * np.arange(4001)
    signal = np.exp(-0.01 * t) * np.cos(2 * t) + np.exp(-0.1 * t) * np.cos(8 * t)
    traj = TrajectorySet.from_arrays([signal], 0.05)

    truncated = reduce.truncate_transients(traj, 2, TransientSettings(window=800, prominence=1e-4))

    start = truncated.trajectories[0].time[0]
    assert 30.0 <= start <= 45.0, f"Unexpected truncation time {start}."


@pytest.mark.parametrize(
    "d, frequencies",
    [
        pytest.param(1, (2.0,), id="one dimension one frequency"),
        pytest.param(3, (2.0, 8.0), id="three dimensions two frequencies"),
    ],
)
def test_truncate_transients_odd_dimension(d: int, frequencies: tuple[float, ...]):
    """
    arrange: given persistent oscillations as many as half the dimension, rounded up.
    act: when transients are truncated for that dimension.
    assert: nothing is cut.
    """
    t = 0.05 * np.arange(4001)
    traj = TrajectorySet.from_arrays([sum(np.cos(f * t) for f in frequencies)], 0.05)

    truncated = reduce.truncate_transients(traj, d, TransientSettings(window=800))

    assert truncated.trajectories[0].time[0] == 0.0, "Unexpected truncation."


def test_truncate_transients_fails_on_persistent_frequencies():
    """
    arrange: given two undamped oscillations.
    act: when transients are truncated for a two-dimensional model.
    assert: TransientTruncationError is raised.
    """
    t = 0.05 * np.arange(4001)
    traj = TrajectorySet.from_arrays([np.cos(2 * t) + np.cos(8 * t)], 0.05)

    with pytest.raises(reduce.TransientTruncationError):
        reduce.truncate_transients(traj, 2, TransientSettings(window=800))


def test_svd_reduce_plane():
    """
    arrange: given three-dimensional trajectories lying in a plane.
    act: when they are reduced to two dimensions.
    assert: no energy is lost and lifting recovers the data.
    """
    rng = np.random.default_rng(0)
    plane = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]])
    traj = TrajectorySet.from_arrays([plane @ rng.normal(size=(2, 50)) for _ in range(2)], 0.1)

    embedding, reduced = reduce.svd_reduce(traj, 2)

    assert reduced.dim == 2, "Unexpected reduced dimension."
    assert embedding.residual_energy < 1e-20, "Plane data should reduce losslessly."
    np.testing.assert_allclose(
        reduce.lift(embedding, reduced.trajectories[0].states),
        traj.trajectories[0].states,
        atol=1e-12,
    )


def test_svd_reduce_insufficient_rank():
    """
    arrange: given three-dimensional trajectories lying in a plane.
    act: when they are reduced to three dimensions.
    assert: InsufficientRankError is raised.
    """
    plane = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]])
    traj = TrajectorySet.from_arrays(
        [plane @ np.random.default_rng(1).normal(size=(2, 50))], 0.1
    )

    with pytest.raises(reduce.InsufficientRankError):
        reduce.svd_reduce(traj, 3)


def test_snapshot_pairs_across_trajectories():
    """
    arrange: given two trajectories of 10 and 6 samples.
    act: when snapshot pairs are built with stride 2.
    assert: pairs never straddle trajectories and the step is doubled.
    """
    traj = TrajectorySet.from_arrays([np.arange(10.0), 100 + np.arange(6.0)], 0.1)

    pairs = reduce.snapshot_pairs(traj, stride=2)

    assert pairs.count == 12, "Unexpected pair count."
    assert pairs.dt == pytest.approx(0.2), "Unexpected pair step."
    np.testing.assert_array_equal(pairs.phi_hat - pairs.phi, 2.0 * np.ones((1, 12)))


@pytest.mark.parametrize(
    "stride",
    [
        pytest.param(0, id="zero stride"),
        pytest.param(6, id="stride beyond trajectory"),
    ],
)
def test_snapshot_pairs_invalid_stride(stride: int):
    """
    arrange: given a trajectory of six samples.
    act: when snapshot pairs are built with an invalid stride.
    assert: SeriesTooShortError is raised.
    """
    traj = TrajectorySet.from_arrays([np.arange(6.0)], 0.1)

    with pytest.raises(reduce.SeriesTooShortError):
        reduce.snapshot_pairs(traj, stride=stride)


def test_estimate_derivatives():
    """
    arrange: given samples of sin t.
    act: when derivatives are estimated.
    assert: they approximate cos t.
    """
    t = 0.01 * np.arange(629)
    traj = TrajectorySet.from_arrays([np.sin(t)], 0.01)

    rates = reduce.estimate_derivatives(traj)

    np.testing.assert_allclose(rates.trajectories[0].states[0], np.cos(t), atol=1e-4)


def test_trajectory_set_rejects_mixed_steps():
    """
    arrange: given a trajectory sampled with step 0.1.
    act: when a set claims step 0.2.
    assert: InconsistentSamplingError is raised.
    """
    trajectory = reduce.Trajectory(time=0.1 * np.arange(5), states=np.zeros((1, 5)))

    with pytest.raises(reduce.InconsistentSamplingError):
        TrajectorySet(trajectories=(trajectory,), dt=0.2)


def test_csv_round_trip(tmp_path: Path):
    """
    arrange: given two labelled trajectories.
    act: when they are written to CSV and read back.
    assert: labels, times and states are recovered exactly.
    """
    rng = np.random.default_rng(2)
    traj = TrajectorySet.from_arrays(
        [rng.normal(size=(2, 7)), rng.normal(size=(2, 4))], 0.05, labels=("a", "b")
    )
    path = tmp_path / "data.csv"

    reduce.write_csv(traj, path)
    loaded = reduce.read_csv(path)

    assert loaded.labels == ("a", "b"), "Unexpected labels."
    assert loaded.dt == pytest.approx(0.05), "Unexpected step."
    for original, restored in zip(traj.trajectories, loaded.trajectories):
        np.testing.assert_array_equal(restored.states, original.states)
        np.testing.assert_array_equal(restored.time, original.time)


def test_to_frame_single_trajectory():
    """
    arrange: given a single trajectory.
    act: when it is tabulated.
    assert: no trajectory column is written.
    """
    traj = TrajectorySet.from_arrays([np.zeros((2, 3))], 1.0)

    frame = reduce.to_frame(traj)

    assert list(frame.columns) == ["t", "phi_1", "phi_2"], "Unexpected columns."


@pytest.mark.parametrize(
    "content",
    [
        pytest.param("t,x\n0,1\n1,2\n", id="malformed header"),
        pytest.param("phi_1,t\n0,1\n1,2\n", id="time not first"),
        pytest.param("t,phi_1\n0,1\n1,abc\n", id="non-numeric value"),
        pytest.param("t,phi_1\n0,1\n0.1,2\n0.3,3\n", id="non-uniform sampling"),
        pytest.param("", id="empty file"),
    ],
)
def test_read_csv_invalid(tmp_path: Path, content: str):
    """
    arrange: given a malformed trajectory file.
    act: when it is read.
    assert: CsvFormatError is raised.
    """
    path = tmp_path / "bad.csv"
    path.write_text(content, encoding="utf-8")

    with pytest.raises(reduce.CsvFormatError):
        reduce.read_csv(path)
