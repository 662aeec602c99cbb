# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Split a linearized model into slow and fast blocks and project along the fast fibers."""

import dataclasses
import logging
import math

import numpy as np
from scipy import linalg

import basis as basis_module
import ddl
import series
from ddl import DdlModel

logger = logging.getLogger(__name__)

DEFAULT_GAP_TOL = 1.05
CONJUGATE_RTOL = 1e-10


class FoliationError(Exception):
    """Represents an error while splitting a model."""


class SpectralGapError(FoliationError):
    """Exception raised when the requested split has no spectral gap.

    Attributes:
        msg: Explanation of the error.
        moduli: Eigenvalue moduli, slow first.
    """

    def __init__(self, msg: str, moduli: np.ndarray):
        """Initialize a new instance of the SpectralGapError exception.

        Args:
            msg: Explanation of the error.
            moduli: Eigenvalue moduli, slow first.
        """
        super().__init__(msg)
        self.msg = msg
        self.moduli = moduli


@dataclasses.dataclass(frozen=True)
class SpectralSplit:
    """Real block form of B ordered slow to fast.

    Attributes:
        transform: Real matrix T whose columns span the slow then the fast subspace.
        inverse: T⁻¹.
        d1: Slow block size.
        eigenvalues: Eigenvalues in block order.
        gap_ratio: Modulus ratio across the split.
    """

    transform: np.ndarray
    inverse: np.ndarray
    d1: int
    eigenvalues: np.ndarray
    gap_ratio: float

    @property
    def d2(self) -> int:
        """Fast block size.

        Returns:
            d − d1.
        """
        return self.transform.shape[0] - self.d1


def _slow_first(eigenvalues: np.ndarray) -> np.ndarray:
    """Order eigenvalues by decreasing modulus with conjugates adjacent.

    Args:
        eigenvalues: Eigenvalues.

    Returns:
        Index order.
    """
    moduli = np.round(np.abs(eigenvalues), 10)
    angles = np.round(np.abs(np.angle(eigenvalues)), 10)
    return np.array(
        sorted(
            range(eigenvalues.size),
            key=lambda i: (-moduli[i], angles[i], -np.sign(eigenvalues[i].imag)),
        ),
        dtype=int,
    )


def _gap(moduli: np.ndarray, d1: int) -> tuple[float, float]:
    """Separation of the moduli at position d1.

    Decay-rate ratios are used when every mode decays, modulus ratios otherwise.

    Args:
        moduli: Moduli, slow first.
        d1: Split position.

    Returns:
        The tested ratio and the modulus ratio.
    """
    slow, fast = moduli[d1 - 1], moduli[d1]
    modulus_ratio = slow / fast if fast > 0 else math.inf
    if 0 < fast <= slow < 1:
        return math.log(fast) / math.log(slow), modulus_ratio
    return modulus_ratio, modulus_ratio


def split_spectrum(model: DdlModel, d1: int, gap_tol: float = DEFAULT_GAP_TOL) -> SpectralSplit:
    """Split the linear map into a slow block of size d1 and the fast rest.

    Args:
        model: The model.
        d1: Slow block size.
        gap_tol: Required ratio across the split.

    Returns:
        The split.

    Raises:
        SpectralGapError: if d1 is out of range, splits a conjugate pair or sits on no gap.
    """
    eigenvalues, vectors = linalg.eig(model.B)
    order = _slow_first(eigenvalues)
    eigenvalues, vectors = eigenvalues[order], vectors[:, order]
    moduli = np.abs(eigenvalues)
    dim = eigenvalues.size
    if not 1 <= d1 <= dim:
        raise SpectralGapError(f"Slow dimension {d1} outside 1..{dim}.", moduli)
    scale = max(float(moduli.max()), 1e-300)
    columns = []
    index = 0
    while index < dim:
        value = eigenvalues[index]
        if abs(value.imag) <= CONJUGATE_RTOL * scale:
            columns.append(np.real(vectors[:, index]))
            index += 1
            continue
        if index + 1 == d1:
            raise SpectralGapError(
                f"Slow dimension {d1} splits the conjugate pair {value:.6g}.", moduli
            )
        vector = vectors[:, index] if value.imag > 0 else vectors[:, index + 1]
        columns.extend([vector.real, vector.imag])
        index += 2
    ratio, modulus_ratio = _gap(moduli, d1) if d1 < dim else (math.inf, math.inf)
    if ratio <= gap_tol:
        raise SpectralGapError(
            f"No spectral gap after {d1} eigenvalue(s): moduli {np.round(moduli, 6).tolist()}.",
            moduli,
        )
    transform = np.column_stack(columns)
    logger.info("Spectral split d1=%s with gap ratio %s", d1, modulus_ratio)
    return SpectralSplit(
        transform=transform,
        inverse=linalg.inv(transform),
        d1=d1,
        eigenvalues=eigenvalues,
        gap_ratio=modulus_ratio,
    )


def split_coordinates(model: DdlModel, split: SpectralSplit, phi: np.ndarray) -> np.ndarray:
    """Linearized coordinates in the block basis, η = T⁻¹ κ⁻¹(φ).

    Args:
        model: The model.
        split: The split.
        phi: A d-vector or d×m states.

    Returns:
        η, shaped like the input.
    """
    return split.inverse @ ddl.to_linear_coords(model, phi)


def fiber_project(model: DdlModel, split: SpectralSplit, phi: np.ndarray) -> np.ndarray:
    """Base point on the slow sub-manifold of the fiber through φ.

    The fast block of the linearized coordinates is zeroed; outside the validity domain of
    the model the result is a polynomial extrapolation.

    Args:
        model: The model.
        split: The split.
        phi: A d-vector or d×m states.

    Returns:
        The base points, shaped like the input.
    """
    eta = np.array(split_coordinates(model, split, phi), dtype=float)
    eta[split.d1 :] = 0.0
    return ddl.from_linear_coords(model, split.transform @ eta)


def slow_observable(split: SpectralSplit, phi: np.ndarray) -> np.ndarray:
    """Slow block of the observables in the split basis.

    Args:
        split: The split.
        phi: A d-vector or d×m states.

    Returns:
        The first d1 rows of T⁻¹ φ.
    """
    return (split.inverse @ np.asarray(phi, dtype=float))[: split.d1]


def slow_restrict(model: DdlModel, split: SpectralSplit) -> DdlModel:
    """Reduced model on the slow sub-manifold.

    Its observables are the slow block of T⁻¹ φ and its linearized coordinates the slow
    block of η, so ψ = η₁ + [T⁻¹ ℓ(T₁ η₁)]₁.

    Args:
        model: The model.
        split: The split.

    Returns:
        A d1-dimensional model; the model itself when d1 = d.
    """
    if split.d2 == 0:
        return model
    d1 = split.d1
    slow_columns = split.transform[:, :d1]
    slow_basis = basis_module.enumerate_monomials(d1, model.basis.min_degree, model.order)
    substitution = series.linear_substitution(model.basis, slow_basis, slow_columns)
    slow_qinv = (split.inverse @ model.Qinv)[:d1] @ substitution
    slow_q = series.invert_series(slow_qinv, slow_basis, model.order)
    linear = (split.inverse @ model.B @ split.transform)[:d1, :d1]
    return DdlModel(
        basis=slow_basis, B=linear, Q=slow_q, Qinv=slow_qinv, dt=model.dt, nu=model.nu
    )


def slow_to_full(
    model: DdlModel, split: SpectralSplit, slow: DdlModel, psi: np.ndarray
) -> np.ndarray:
    """Lift slow-model observables to full observables on the slow sub-manifold.

    Args:
        model: The full model.
        split: The split used to build slow.
        slow: The slow model.
        psi: A d1-vector or d1×m slow observables.

    Returns:
        φ = κ(T₁ η₁), shaped like the input.
    """
    eta = ddl.to_linear_coords(slow, psi)
    return ddl.from_linear_coords(model, split.transform[:, : split.d1] @ eta)
