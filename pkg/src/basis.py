# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Multivariate monomial feature maps and their derivatives."""

import dataclasses
import functools
import itertools
import logging
import math
import typing

import numpy as np

logger = logging.getLogger(__name__)


class BasisError(Exception):
    """Base exception for monomial basis errors."""


class InvalidDegreeError(BasisError):
    """Represents invalid dimension or degree bounds.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the InvalidDegreeError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class ShapeMismatchError(BasisError):
    """Represents states whose dimension does not match the basis.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ShapeMismatchError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


@dataclasses.dataclass(frozen=True)
class MonomialBasis:
    """Ordered set of multivariate monomials.

    Attributes:
        dim: Number of variables.
        exponents: Exponent vectors in graded lexicographic order.
        min_degree: Smallest total degree in the basis.
        max_degree: Largest total degree in the basis.
    """

    dim: int
    exponents: tuple[tuple[int, ...], ...]
    min_degree: int
    max_degree: int

    def __len__(self) -> int:
        """Number of monomials.

        Returns:
            The basis length.
        """
        return len(self.exponents)

    @functools.cached_property
    def exponent_matrix(self) -> np.ndarray:
        """Exponents stacked as an integer matrix of shape (M, dim).

        Returns:
            The exponent matrix.
        """
        return np.array(self.exponents, dtype=int).reshape(len(self.exponents), self.dim)

    @functools.cached_property
    def degrees(self) -> np.ndarray:
        """Total degree of every monomial.

        Returns:
            Integer vector of length M.
        """
        return self.exponent_matrix.sum(axis=1)

    def degree_slice(self, degree: int) -> slice:
        """Locate the contiguous block of monomials of one total degree.

        Args:
            degree: The total degree.

        Returns:
            Slice into the basis ordering.
        """
        start = int(np.searchsorted(self.degrees, degree, side="left"))
        stop = int(np.searchsorted(self.degrees, degree, side="right"))
        return slice(start, stop)

    def restrict(self, min_degree: int, max_degree: int) -> "MonomialBasis":
        """Build the sub-basis of monomials within a degree window.

        Args:
            min_degree: Lowest kept degree.
            max_degree: Highest kept degree.

        Returns:
            The restricted basis, same ordering.
        """
        return enumerate_monomials(self.dim, min_degree, max_degree)


def monomial_count(dim: int, min_degree: int, max_degree: int) -> int:
    """Count monomials of total degree min_degree..max_degree in dim variables.

    Args:
        dim: Number of variables.
        min_degree: Lowest degree.
        max_degree: Highest degree.

    Returns:
        The number of monomials.
    """
    return math.comb(dim + max_degree, dim) - math.comb(dim + min_degree - 1, dim)


def _homogeneous_exponents(dim: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of one total degree in descending lexicographic order.

    Args:
        dim: Number of variables.
        degree: The total degree.

    Returns:
        The exponent vectors.
    """
    exponents = []
    for combo in itertools.combinations_with_replacement(range(dim), degree):
        counts = [0] * dim
        for index in combo:
            counts[index] += 1
        exponents.append(tuple(counts))
    return sorted(exponents, reverse=True)


@functools.lru_cache(maxsize=128)
def _cached_basis(dim: int, min_degree: int, max_degree: int) -> MonomialBasis:
    """Enumerate a basis; cached since bases are immutable.

    Args:
        dim: Number of variables.
        min_degree: Lowest degree.
        max_degree: Highest degree.

    Returns:
        The basis.
    """
    exponents: list[tuple[int, ...]] = []
    for degree in range(min_degree, max_degree + 1):
        exponents.extend(_homogeneous_exponents(dim, degree))
    return MonomialBasis(
        dim=dim, exponents=tuple(exponents), min_degree=min_degree, max_degree=max_degree
    )


def enumerate_monomials(dim: int, k_min: int, k_max: int) -> MonomialBasis:
    """Enumerate all monomials of total degree k_min..k_max in graded lexicographic order.

    Within one degree the exponent vectors are sorted in descending lexicographic order, so
    for two variables the quadratic block reads x², xy, y².

    Args:
        dim: Number of variables, at least 1.
        k_min: Lowest degree. Nonlinear feature maps use 2; series helpers also use 1.
        k_max: Highest degree, at least k_min.

    Returns:
        The monomial basis.

    Raises:
        InvalidDegreeError: if the dimension or degree bounds are invalid.
    """
    if dim < 1:
        raise InvalidDegreeError(f"Basis dimension must be positive, got {dim}.")
    if k_min < 1 or k_max < k_min:
        raise InvalidDegreeError(f"Invalid degree bounds {k_min}..{k_max}.")
    return _cached_basis(dim, k_min, k_max)


def basis_from_exponents(exponents: typing.Sequence[typing.Sequence[int]]) -> MonomialBasis:
    """Rebuild a basis from an explicit exponent list, as stored in model files.

    Args:
        exponents: Exponent vectors, in the stored order.

    Returns:
        The basis.

    Raises:
        InvalidDegreeError: if the list is empty, ragged or not a complete graded block.
    """
    if not exponents:
        raise InvalidDegreeError("Exponent list must not be empty.")
    dims = {len(exponent) for exponent in exponents}
    if len(dims) != 1:
        raise InvalidDegreeError("Exponent vectors must share one dimension.")
    degrees = [sum(exponent) for exponent in exponents]
    basis = enumerate_monomials(dims.pop(), min(degrees), max(degrees))
    if tuple(tuple(int(e) for e in exponent) for exponent in exponents) != basis.exponents:
        raise InvalidDegreeError("Exponent list is not a graded lexicographic monomial block.")
    return basis


def _as_states(basis: MonomialBasis, states: np.ndarray) -> np.ndarray:
    """Check the state matrix against the basis dimension.

    Args:
        basis: The monomial basis.
        states: A d-vector or a d×m matrix.

    Returns:
        The states as a float d×m matrix.

    Raises:
        ShapeMismatchError: if the leading dimension does not match the basis.
    """
    array = np.asarray(states, dtype=float)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2 or array.shape[0] != basis.dim:
        raise ShapeMismatchError(
            f"States of shape {np.shape(states)} do not match basis dimension {basis.dim}."
        )
    return array


def eval_features(basis: MonomialBasis, states: np.ndarray) -> np.ndarray:
    """Evaluate every monomial on every state column.

    Args:
        basis: The monomial basis.
        states: A d×m state matrix (a d-vector is treated as one column).

    Returns:
        The M×m feature matrix.
    """
    array = _as_states(basis, states)
    exponents = basis.exponent_matrix
    return np.prod(array[None, :, :] ** exponents[:, :, None], axis=1)


def eval_feature_jacobians(basis: MonomialBasis, states: np.ndarray) -> np.ndarray:
    """Evaluate the feature Jacobian at every state column.

    Args:
        basis: The monomial basis.
        states: A d×m state matrix.

    Returns:
        Array of shape (m, M, d) with entry (i, j, l) = ∂(x^e_j)/∂x_l at column i.
    """
    array = _as_states(basis, states)
    exponents = basis.exponent_matrix
    jacobians = np.zeros((array.shape[1], len(basis), basis.dim))
    for column in range(basis.dim):
        factor = exponents[:, column]
        reduced = exponents.copy()
        reduced[:, column] = np.maximum(reduced[:, column] - 1, 0)
        values = np.prod(array[None, :, :] ** reduced[:, :, None], axis=1)
        jacobians[:, :, column] = (factor[:, None] * values).T
    return jacobians


def eval_feature_jacobian(basis: MonomialBasis, state: np.ndarray) -> np.ndarray:
    """Evaluate the feature Jacobian at one state.

    Args:
        basis: The monomial basis.
        state: A d-vector.

    Returns:
        The M×d Jacobian.

    Raises:
        ShapeMismatchError: if the state is not a single d-vector.
    """
    vector = np.asarray(state, dtype=float)
    if vector.shape != (basis.dim,):
        raise ShapeMismatchError(
            f"State of shape {vector.shape} does not match basis dimension {basis.dim}."
        )
    return eval_feature_jacobians(basis, vector)[0]


def eval_feature_hessian(basis: MonomialBasis, state: np.ndarray) -> np.ndarray:
    """Evaluate the second derivatives of every monomial at one state.

    Args:
        basis: The monomial basis.
        state: A d-vector.

    Returns:
        Array of shape (M, d, d), symmetric in the last two axes.
    """
    vector = _as_states(basis, state)[:, 0]
    exponents = basis.exponent_matrix
    hessian = np.zeros((len(basis), basis.dim, basis.dim))
    for first in range(basis.dim):
        for second in range(first, basis.dim):
            factor = exponents[:, first] * (exponents[:, second] - int(first == second))
            reduced = exponents.copy()
            reduced[:, first] -= 1
            reduced[:, second] -= 1
            valid = factor > 0
            values = np.zeros(len(basis))
            values[valid] = np.prod(vector[None, :] ** reduced[valid], axis=1)
            hessian[:, first, second] = factor * values
            hessian[:, second, first] = hessian[:, first, second]
    return hessian
