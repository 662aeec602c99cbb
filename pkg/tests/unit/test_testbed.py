# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Reference systems module tests."""

import math

import numpy as np
import pytest

import basis
import linfit
import reduce
import testbed
from reduce import TrajectorySet
from testbed import SystemSpec

from .helpers import nearest_distance


def test_duffing_polynomial_matches_field(duffing: SystemSpec):
    """
    arrange: given the Duffing system and its polynomial form in observables.
    act: when both are evaluated at random observables.
    assert: they agree and the linear part is the rotation block of the spectrum.
    """
    dynamics = testbed.duffing_polynomial()
    transform = duffing.metadata["transform"]
    phi = np.random.default_rng(0).normal(scale=0.3, size=(2, 6))

    states = testbed.from_observables(duffing, phi)
    expected = np.linalg.solve(transform, duffing.function(0.0, states))
    actual = dynamics.B @ phi + dynamics.q @ basis.eval_features(dynamics.basis, phi)

    np.testing.assert_allclose(actual, expected, atol=1e-12)
    decay, frequency = duffing.metadata["decay"], duffing.metadata["frequency"]
    np.testing.assert_allclose(
        dynamics.B, [[-decay, -frequency], [frequency, -decay]], atol=1e-12
    )


def test_observables_round_trip(duffing: SystemSpec):
    """
    arrange: given Duffing states.
    act: when they are observed and recovered.
    assert: the states are unchanged and the fixed point observes as zero.
    """
    states = np.array([[1.1, 0.8, 1.0], [0.2, -0.1, 0.0]])

    recovered = testbed.from_observables(duffing, testbed.to_observables(duffing, states))

    np.testing.assert_allclose(recovered, states, atol=1e-14)
    np.testing.assert_allclose(testbed.to_observables(duffing, np.array([1.0, 0.0])), 0.0)


def test_integrate_sample_count(duffing: SystemSpec):
    """
    arrange: given the Duffing system.
    act: when it is integrated for 10 time units with output step 0.01.
    assert: 1001 uniformly spaced samples are returned.
    """
    trajectory = testbed.integrate(duffing, np.array([1.2, 0.0]), 10.0, 0.01)

    assert trajectory.length == 1001, "Unexpected sample count."
    np.testing.assert_allclose(np.diff(trajectory.time), 0.01)


def test_integrate_methods_agree(duffing: SystemSpec):
    """
    arrange: given the Duffing system and one initial state.
    act: when it is integrated with fixed-step RK4 and adaptive DOP853.
    assert: the trajectories agree.
    """
    x0 = np.array([1.2, 0.0])

    fixed = testbed.integrate(duffing, x0, 10.0, 0.01, method=testbed.RK4)
    adaptive = testbed.integrate(duffing, x0, 10.0, 0.01, method="DOP853")

    np.testing.assert_allclose(fixed.states, adaptive.states, atol=1e-8)


def test_integrate_conserves_energy_without_damping():
    """
    arrange: given the undamped Duffing oscillator.
    act: when it is integrated.
    assert: the energy is conserved.
    """
    spec = testbed.duffing(d=0.0)

    trajectory = testbed.integrate(spec, np.array([1.3, 0.1]), 50.0, 0.1, method="DOP853")

    energy = testbed.duffing_hamiltonian(trajectory.states)
    assert np.ptp(energy) < 1e-7, "Energy drifted."


def test_integrate_unknown_method(duffing: SystemSpec):
    """
    arrange: given the Duffing system.
    act: when it is integrated with an unknown method.
    assert: IntegrationError is raised.
    """
    with pytest.raises(testbed.IntegrationError):
        testbed.integrate(duffing, np.array([1.0, 0.0]), 1.0, 0.1, method="euler")


def test_integrate_and_iterate_kinds(duffing: SystemSpec):
    """
    arrange: given an ODE and a map.
    act: when the ODE is iterated and the map integrated.
    assert: IntegrationError is raised both times.
    """
    with pytest.raises(testbed.IntegrationError):
        testbed.iterate(duffing, np.array([1.0, 0.0]), 5)
    with pytest.raises(testbed.IntegrationError):
        testbed.integrate(testbed.three_d_nonnormal_map(), np.zeros(3), 1.0, 0.1)


def test_three_d_map_spectrum():
    """
    arrange: given the non-normal 3D map.
    act: when its matrix is iterated and its eigenvalues computed.
    assert: the declared spectrum is reproduced and iterates follow the matrix.
    """
    spec = testbed.three_d_nonnormal_map()
    matrix = spec.metadata["matrix"]
    x0 = np.array([0.1, -0.2, 0.3])

    trajectory = testbed.iterate(spec, x0, 4)

    assert nearest_distance(spec.eigenvalues, np.linalg.eigvals(matrix)) < 1e-12
    np.testing.assert_allclose(trajectory.states[:, 4], np.linalg.matrix_power(matrix, 4) @ x0)
    assert abs(spec.eigenvalues[0]) == pytest.approx(math.sqrt(0.6075 + 0.25))


def test_chain_slow_mode():
    """
    arrange: given the default five-mass chain.
    act: when its slow mode is computed.
    assert: it matches the lowest fixed-free chain frequency with Rayleigh damping.
    """
    spec = testbed.oscillator_chain()
    omega = 2 * math.sin(math.pi / 22)
    damping = 0.002 + 0.005 * omega**2

    eigenvalue, _ = testbed.slow_mode(spec)

    assert eigenvalue.real == pytest.approx(-damping / 2, rel=1e-8), "Unexpected decay."
    assert eigenvalue.imag == pytest.approx(
        math.sqrt(omega**2 - damping**2 / 4), rel=1e-8
    ), "Unexpected frequency."


def test_chain_slow_mode_dmd():
    """
    arrange: given a small-amplitude chain trajectory along the slowest mode.
    act: when the data is reduced to two dimensions and fitted by DMD.
    assert: the continuous eigenvalues match the slow pair.
    """
    spec = testbed.oscillator_chain()
    eigenvalue, _ = testbed.slow_mode(spec)
    x0 = testbed.modal_initial_condition(spec, 0, 0.01)
    trajectory = testbed.integrate(spec, x0, 60.0, 0.5)
    traj = TrajectorySet.from_arrays([trajectory.states], 0.5)
    _, reduced = reduce.svd_reduce(traj, 2, fixed_point=np.zeros(spec.dim))

    model = linfit.fit_dmd(reduce.snapshot_pairs(reduced))

    rates = np.log(np.linalg.eigvals(model.D).astype(complex)) / 0.5
    assert nearest_distance(np.array([eigenvalue, eigenvalue.conjugate()]), rates) < 1e-3


def test_rank_degeneracy_observables():
    """
    arrange: given the default chain.
    act: when the three candidate observables are checked on the slow subspace.
    assert: only the pair of neighbouring positions is degenerate.
    """
    checks = testbed.rank_degeneracy_observables()

    assert {check.name: check.rank for check in checks} == {
        "slow-eigenvector": 2,
        "q1-velocity1": 2,
        "q1-q2": 1,
    }, "Unexpected ranks."
    assert [check.degenerate for check in checks] == [False, False, True]


def test_modal_initial_condition_requires_chain(duffing: SystemSpec):
    """
    arrange: given a system without mode shapes.
    act: when a modal initial condition is requested.
    assert: UnknownSystemError is raised.
    """
    with pytest.raises(testbed.UnknownSystemError):
        testbed.modal_initial_condition(duffing, 0, 0.1)


def test_sample_initial_conditions_in_ball(duffing: SystemSpec):
    """
    arrange: given the Duffing system.
    act: when initial conditions are sampled with radius 0.2.
    assert: every sample lies in the ball around the fixed point and sampling is seeded.
    """
    samples = testbed.sample_initial_conditions(duffing, 50, 0.2, seed=3)

    distances = np.linalg.norm(samples - duffing.fixed_point[:, None], axis=0)
    assert samples.shape == (2, 50), "Unexpected sample shape."
    assert distances.max() <= 0.2, "Sample outside the ball."
    np.testing.assert_array_equal(
        samples, testbed.sample_initial_conditions(duffing, 50, 0.2, seed=3)
    )


def test_nonsmooth_field():
    """
    arrange: given the nonsmooth scalar flow with exponent 1.
    act: when the field is evaluated at 0.5.
    assert: -x + x|x| is returned.
    """
    spec = testbed.nonsmooth_1d()

    assert spec.function(0.0, np.array([0.5]))[0] == pytest.approx(-0.25)


def _dmd_error(alpha: float, amplitude: float) -> float:
    """Normalized DMD prediction error on one trajectory of the nonsmooth flow.

    Args:
        alpha: Exponent of the nonlinearity.
        amplitude: Initial state.

    Returns:
        The normalized max error of the prediction from the initial state.
    """
    spec = testbed.nonsmooth_1d(alpha)
    states = testbed.integrate(
        spec, np.array([amplitude]), 5.0, 0.05, method="DOP853", tol=1e-13
    ).states
    traj = TrajectorySet.from_arrays([states], 0.05)
    model = linfit.fit_dmd(reduce.snapshot_pairs(traj))
    prediction = linfit.predict(model, states[:, 0], states.shape[1] - 1)
    return linfit.trajectory_error(states, prediction).normalized_max_error


def test_nonsmooth_dmd_error_separates_at_small_amplitude():
    """
    arrange: given the nonsmooth flow with exponents 0.9 and 1 at decreasing amplitudes.
    act: when DMD is fitted on a single trajectory at each amplitude.
    assert: the error ratio of exponent 0.9 over exponent 1 exceeds 1 and grows as the
        amplitude shrinks.
    """
    amplitudes = (1e-2, 5e-3, 2e-3, 1e-3)

    ratios = np.array(
        [_dmd_error(0.9, amplitude) / _dmd_error(1.0, amplitude) for amplitude in amplitudes]
    )

    assert np.all(ratios > 1), f"Unexpected ratios {ratios}."
    assert np.all(np.diff(ratios) > 0), f"Ratios must grow as the amplitude shrinks: {ratios}."


def test_get_system_with_parameters():
    """
    arrange: given a registered name and a parameter override.
    act: when the system is built.
    assert: the override is applied.
    """
    spec = testbed.get_system("duffing", {"d": 0.02})

    assert spec.parameters["d"] == 0.02, "Override not applied."
    assert spec.metadata["decay"] == pytest.approx(0.01), "Unexpected decay."


@pytest.mark.parametrize(
    "name, parameters",
    [
        pytest.param("lorenz", None, id="unknown name"),
        pytest.param("duffing", {"stiffness": 1.0}, id="unknown parameter"),
    ],
)
def test_get_system_invalid(name: str, parameters: dict):
    """
    arrange: given an unknown system name or parameter.
    act: when the system is built.
    assert: UnknownSystemError is raised.
    """
    with pytest.raises(testbed.UnknownSystemError):
        testbed.get_system(name, parameters)
