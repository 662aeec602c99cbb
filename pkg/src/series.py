# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Truncated multivariate power series on dense coefficient arrays.

A polynomial in d variables truncated at total degree r is stored as an array of shape
(r+1,)*d whose entry at index (i_1, ..., i_d) is the coefficient of x_1^i_1 ... x_d^i_d.
Vector-valued polynomials carry one extra leading axis.
"""

import functools

import numpy as np
from scipy import signal

from basis import MonomialBasis, enumerate_monomials


class SeriesError(Exception):
    """Represents an invalid power-series operation."""


@functools.lru_cache(maxsize=64)
def degree_mask(dim: int, order: int) -> np.ndarray:
    """Boolean mask of dense indices with total degree at most order.

    Args:
        dim: Number of variables.
        order: Truncation degree.

    Returns:
        The mask, shape (order+1,)*dim.
    """
    grid = np.indices((order + 1,) * dim)
    return grid.sum(axis=0) <= order


def zeros(dim: int, order: int, components: int = 0) -> np.ndarray:
    """Allocate a zero series.

    Args:
        dim: Number of variables.
        order: Truncation degree.
        components: Leading component count; 0 for a scalar series.

    Returns:
        The zero array.
    """
    shape = (order + 1,) * dim
    return np.zeros((components, *shape) if components else shape)


def identity(dim: int, order: int) -> np.ndarray:
    """Build the identity map x ↦ x as a vector series.

    Args:
        dim: Number of variables.
        order: Truncation degree, at least 1.

    Returns:
        Array of shape (dim, (order+1,)*dim).
    """
    result = zeros(dim, order, dim)
    for component in range(dim):
        index = [0] * dim
        index[component] = 1
        result[(component, *index)] = 1.0
    return result


def to_dense(
    coefficients: np.ndarray, basis: MonomialBasis, order: int, with_identity: bool = False
) -> np.ndarray:
    """Scatter coefficient rows over a monomial basis into dense series.

    Args:
        coefficients: Matrix of shape (c, M).
        basis: Basis the columns refer to.
        order: Truncation degree of the result; monomials above it are dropped.
        with_identity: Add x ↦ x (requires c == basis.dim).

    Returns:
        Array of shape (c, (order+1,)*dim).
    """
    coefficients = np.atleast_2d(coefficients)
    result = zeros(basis.dim, order, coefficients.shape[0])
    if with_identity:
        result += identity(basis.dim, order)
    for column, exponent in enumerate(basis.exponents):
        if sum(exponent) > order:
            continue
        result[(slice(None), *exponent)] += coefficients[:, column]
    return result


def from_dense(arrays: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """Gather the coefficients of the basis monomials from dense series.

    Args:
        arrays: Array of shape (c, (r+1,)*dim) with r at least the basis max degree.
        basis: The target basis.

    Returns:
        Matrix of shape (c, M).

    Raises:
        SeriesError: if the arrays are truncated below the basis degree.
    """
    if arrays.shape[1] - 1 < basis.max_degree:
        raise SeriesError("Series order is below the basis degree.")
    columns = [arrays[(slice(None), *exponent)] for exponent in basis.exponents]
    return np.stack(columns, axis=1)


def multiply(first: np.ndarray, second: np.ndarray, order: int) -> np.ndarray:
    """Multiply two scalar series and truncate.

    Args:
        first: Scalar series.
        second: Scalar series of the same dimension.
        order: Truncation degree of the product.

    Returns:
        The truncated product, shape (order+1,)*dim.
    """
    dim = first.ndim
    product = signal.convolve(first, second, method="direct")
    window = tuple(slice(0, order + 1) for _ in range(dim))
    result = zeros(dim, order)
    view = product[window]
    result[tuple(slice(0, size) for size in view.shape)] = view
    return result * degree_mask(dim, order)


def compose_features(basis: MonomialBasis, inner: np.ndarray, order: int) -> np.ndarray:
    """Evaluate every basis monomial on vector series.

    Args:
        basis: Basis whose monomials are composed.
        inner: Vector series with basis.dim components (any number of variables).
        order: Truncation degree.

    Returns:
        Array of shape (M, (order+1,)*n) with n the number of inner variables.
    """
    variables = inner.ndim - 1
    unit = zeros(variables, order)
    unit[(0,) * variables] = 1.0
    padded = [_retruncate(component, order) for component in inner]
    powers: list[list[np.ndarray]] = [[unit] for _ in range(basis.dim)]
    for component in range(basis.dim):
        for _ in range(int(basis.exponent_matrix[:, component].max(initial=0))):
            powers[component].append(multiply(powers[component][-1], padded[component], order))
    features = np.empty((len(basis), *unit.shape))
    for index, exponent in enumerate(basis.exponents):
        value = unit
        for component, power in enumerate(exponent):
            if power:
                value = multiply(value, powers[component][power], order)
        features[index] = value
    return features


def _retruncate(series: np.ndarray, order: int) -> np.ndarray:
    """Pad or cut a scalar series to a new truncation order.

    Args:
        series: Scalar series.
        order: Target truncation degree.

    Returns:
        The series at the target order.
    """
    dim = series.ndim
    result = zeros(dim, order)
    window = tuple(slice(0, min(order + 1, size)) for size in series.shape)
    result[window] = series[window]
    return result * degree_mask(dim, order)


def compose(
    coefficients: np.ndarray, basis: MonomialBasis, inner: np.ndarray, order: int
) -> np.ndarray:
    """Evaluate C·K(p) for vector series p.

    Args:
        coefficients: Matrix of shape (c, M).
        basis: Basis of the columns.
        inner: Vector series with basis.dim components.
        order: Truncation degree.

    Returns:
        Vector series with c components.
    """
    features = compose_features(basis, inner, order)
    return np.tensordot(coefficients, features, axes=(1, 0))


def invert_series(coefficients: np.ndarray, basis: MonomialBasis, order: int) -> np.ndarray:
    """Invert the near-identity map x ↦ x + C·K(x) through a truncation degree.

    Args:
        coefficients: Matrix of shape (d, M) over a basis of degrees 2..k.
        basis: The basis of the columns.
        order: Truncation degree of the inverse, at least 2.

    Returns:
        Coefficients of the inverse over the degree 2..order basis.

    Raises:
        SeriesError: if the basis contains linear or constant terms.
    """
    if basis.min_degree < 2:
        raise SeriesError("Near-identity maps carry no constant or linear basis terms.")
    dim = basis.dim
    unit = identity(dim, order)
    correction = zeros(dim, order, dim)
    # each pass fixes one more degree of the inverse
    for _ in range(order - 1):
        correction = -compose(coefficients, basis, unit + correction, order)
    return from_dense(correction, enumerate_monomials(dim, 2, order))


def linear_substitution(
    basis_out: MonomialBasis, basis_in: MonomialBasis, transform: np.ndarray
) -> np.ndarray:
    """Express K_out(T·x) in terms of K_in(x).

    The two bases must cover the same degree window; substitution of a linear map preserves
    the total degree of every monomial.

    Args:
        basis_out: Basis evaluated on the transformed variables (dimension rows of T).
        basis_in: Basis in the original variables (dimension columns of T).
        transform: Matrix T.

    Returns:
        Matrix S of shape (len(basis_out), len(basis_in)).

    Raises:
        SeriesError: if the shapes or degree windows disagree.
    """
    transform = np.asarray(transform, dtype=float)
    if transform.shape != (basis_out.dim, basis_in.dim):
        raise SeriesError(f"Transform shape {transform.shape} does not match the bases.")
    if (basis_out.min_degree, basis_out.max_degree) != (
        basis_in.min_degree,
        basis_in.max_degree,
    ):
        raise SeriesError("Linear substitution requires matching degree windows.")
    order = basis_out.max_degree
    inner = zeros(basis_in.dim, order, basis_out.dim)
    for variable in range(basis_in.dim):
        index = [0] * basis_in.dim
        index[variable] = 1
        inner[(slice(None), *index)] = transform[:, variable]
    features = compose_features(basis_out, inner, order)
    return from_dense(features, basis_in)
