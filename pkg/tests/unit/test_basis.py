# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Monomial basis module tests."""

import numpy as np
import pytest

import basis


def test_enumerate_monomials_graded_order():
    """
    arrange: given two variables and degrees 2 to 3.
    act: when enumerate_monomials is called.
    assert: the monomials are grouped by degree, descending lexicographic within a degree.
    """
    monomials = basis.enumerate_monomials(2, 2, 3)

    assert monomials.exponents == (
        (2, 0),
        (1, 1),
        (0, 2),
        (3, 0),
        (2, 1),
        (1, 2),
        (0, 3),
    ), "Unexpected monomial ordering."
    assert monomials.degree_slice(3) == slice(3, 7), "Unexpected cubic block."


@pytest.mark.parametrize(
    "dim, k_min, k_max",
    [
        pytest.param(1, 2, 5, id="one variable"),
        pytest.param(2, 2, 5, id="two variables"),
        pytest.param(3, 1, 4, id="with linear terms"),
        pytest.param(5, 2, 3, id="five variables"),
    ],
)
def test_monomial_count(dim: int, k_min: int, k_max: int):
    """
    arrange: given a dimension and a degree window.
    act: when the basis is enumerated.
    assert: its length matches the closed-form count.
    """
    monomials = basis.enumerate_monomials(dim, k_min, k_max)

    assert len(monomials) == basis.monomial_count(dim, k_min, k_max), "Unexpected count."


@pytest.mark.parametrize(
    "dim, k_min, k_max",
    [
        pytest.param(0, 2, 3, id="no variables"),
        pytest.param(2, 0, 3, id="constant term"),
        pytest.param(2, 4, 3, id="empty window"),
    ],
)
def test_enumerate_monomials_invalid(dim: int, k_min: int, k_max: int):
    """
    arrange: given invalid basis bounds.
    act: when enumerate_monomials is called.
    assert: InvalidDegreeError is raised.
    """
    with pytest.raises(basis.InvalidDegreeError):
        basis.enumerate_monomials(dim, k_min, k_max)


def test_eval_features_values():
    """
    arrange: given the quadratic basis in two variables and two states.
    act: when the features are evaluated.
    assert: each column holds x², xy and y² of its state.
    """
    monomials = basis.enumerate_monomials(2, 2, 2)
    states = np.array([[2.0, -1.0], [3.0, 0.5]])

    features = basis.eval_features(monomials, states)

    np.testing.assert_allclose(features, [[4.0, 1.0], [6.0, -0.5], [9.0, 0.25]])


def test_eval_feature_jacobian_matches_finite_differences():
    """
    arrange: given a cubic basis in three variables and a state.
    act: when the analytic Jacobian is evaluated.
    assert: it matches central differences of the features.
    """
    monomials = basis.enumerate_monomials(3, 2, 3)
    state = np.array([0.3, -0.7, 1.1])
    step = 1e-6
    columns = []
    for index in range(3):
        delta = np.zeros(3)
        delta[index] = step
        forward = basis.eval_features(monomials, state + delta)[:, 0]
        backward = basis.eval_features(monomials, state - delta)[:, 0]
        columns.append((forward - backward) / (2 * step))

    jacobian = basis.eval_feature_jacobian(monomials, state)

    np.testing.assert_allclose(jacobian, np.stack(columns, axis=1), atol=1e-8)


def test_eval_feature_hessian_matches_finite_differences():
    """
    arrange: given a basis of degrees 2 to 4 in two variables and a state.
    act: when the Hessian is evaluated.
    assert: it matches central differences of the Jacobian.
    """
    monomials = basis.enumerate_monomials(2, 2, 4)
    state = np.array([0.4, -1.3])
    step = 1e-6
    expected = np.zeros((len(monomials), 2, 2))
    for index in range(2):
        delta = np.zeros(2)
        delta[index] = step
        forward = basis.eval_feature_jacobian(monomials, state + delta)
        backward = basis.eval_feature_jacobian(monomials, state - delta)
        expected[:, :, index] = (forward - backward) / (2 * step)

    hessian = basis.eval_feature_hessian(monomials, state)

    np.testing.assert_allclose(hessian, expected, atol=1e-7)
    np.testing.assert_allclose(hessian, hessian.transpose(0, 2, 1))


def test_eval_feature_jacobian_wrong_shape():
    """
    arrange: given a two-variable basis.
    act: when the Jacobian is requested at a three-component state.
    assert: ShapeMismatchError is raised.
    """
    monomials = basis.enumerate_monomials(2, 2, 3)

    with pytest.raises(basis.ShapeMismatchError):
        basis.eval_feature_jacobian(monomials, np.ones(3))


def test_basis_from_exponents_round_trip():
    """
    arrange: given the exponent list of an enumerated basis.
    act: when the basis is rebuilt from it.
    assert: the same basis is returned.
    """
    monomials = basis.enumerate_monomials(3, 2, 4)

    rebuilt = basis.basis_from_exponents([list(row) for row in monomials.exponents])

    assert rebuilt == monomials, "Rebuilt basis differs."


@pytest.mark.parametrize(
    "exponents",
    [
        pytest.param([], id="empty"),
        pytest.param([[2, 0], [1]], id="ragged"),
        pytest.param([[0, 2], [1, 1], [2, 0]], id="wrong order"),
        pytest.param([[2, 0], [0, 2]], id="missing monomial"),
    ],
)
def test_basis_from_exponents_invalid(exponents: list):
    """
    arrange: given an exponent list that is not a graded block.
    act: when the basis is rebuilt from it.
    assert: InvalidDegreeError is raised.
    """
    with pytest.raises(basis.InvalidDegreeError):
        basis.basis_from_exponents(exponents)
