# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Linear and polynomial regression models fitted to snapshot pairs."""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import linalg, signal

import basis as basis_module
from basis import MonomialBasis

logger = logging.getLogger(__name__)

DEFAULT_SVD_RTOL = 1e-10
DEFAULT_RANK_RTOL = 1e-10
DEFAULT_PEAK_PROMINENCE = 0.1
# eigenvector matrices above this condition number fall back to scipy's logm
EIGEN_LOG_CONDITION_LIMIT = 1e8

DMD = "dmd"
EDMD = "edmd"


class LinearFitError(Exception):
    """Base exception for linear fitting errors."""


class InvalidDataError(LinearFitError):
    """Represents snapshot data unusable for a fit.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the InvalidDataError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class LogarithmBranchError(LinearFitError):
    """Represents a matrix without a real principal logarithm.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the LogarithmBranchError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


@dataclasses.dataclass(frozen=True)
class SnapshotPairs:
    """Aligned snapshot matrices.

    Attributes:
        phi: d×m matrix of states.
        phi_hat: d×m matrix of the states one sampling step later.
        dt: Sampling step.
    """

    phi: np.ndarray
    phi_hat: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        """Coerce the matrices and check their shapes.

        Raises:
            InvalidDataError: if the matrices disagree or dt is not positive.
        """
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        phi_hat = np.atleast_2d(np.asarray(self.phi_hat, dtype=float))
        if phi.shape != phi_hat.shape:
            raise InvalidDataError(
                f"Snapshot shapes differ: {phi.shape} and {phi_hat.shape}."
            )
        if not self.dt > 0:
            raise InvalidDataError(f"Sampling step must be positive, got {self.dt}.")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_hat", phi_hat)

    @property
    def dim(self) -> int:
        """State dimension.

        Returns:
            Number of rows.
        """
        return self.phi.shape[0]

    @property
    def count(self) -> int:
        """Number of pairs.

        Returns:
            Number of columns.
        """
        return self.phi.shape[1]


@dataclasses.dataclass(frozen=True)
class LinearModel:
    """A fitted DMD or EDMD propagator.

    Attributes:
        D: Discrete-time matrix acting on (lifted) states.
        dt: Sampling step.
        kind: Either "dmd" or "edmd".
        basis: Monomial basis of the lift, EDMD only.
        rank: Numerical rank of the regressor used in the fit.
        warnings: Diagnostics raised during the fit.
    """

    D: np.ndarray
    dt: float
    kind: str = DMD
    basis: typing.Optional[MonomialBasis] = None
    rank: int = 0
    warnings: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        """Observable dimension.

        Returns:
            d for both kinds.
        """
        return self.basis.dim if self.basis is not None else self.D.shape[0]


@dataclasses.dataclass(frozen=True)
class PolynomialDynamics:
    """Polynomial reduced dynamics x ↦ B x + q K(x) (maps) or ẋ = B x + q K(x) (flows).

    Attributes:
        B: Linear part.
        q: Nonlinear coefficients over the basis.
        basis: Basis of degrees 2..k.
        dt: Sampling step for maps, 0 for vector fields.
        warnings: Diagnostics raised during the fit.
    """

    B: np.ndarray
    q: np.ndarray
    basis: MonomialBasis
    dt: float = 0.0
    warnings: tuple[str, ...] = ()


@dataclasses.dataclass(frozen=True)
class DataDiagnostics:
    """Data-quality report for a target dimension.

    Attributes:
        rank: Numerical row rank of the state matrix.
        condition_number: Ratio of extreme singular values.
        singular_values: Singular values of the state matrix.
        frequency_counts: Dominant spectral peak count of each row.
        dominant_frequencies: Largest per-row peak count.
        flags: Violations detected for the target dimension.
    """

    rank: int
    condition_number: float
    singular_values: np.ndarray
    frequency_counts: tuple[int, ...]
    dominant_frequencies: int
    flags: tuple[str, ...]


@dataclasses.dataclass(frozen=True)
class ClosureDefect:
    """Relative one-step residual of an EDMD fit.

    Attributes:
        observable: Largest relative residual among the observable rows.
        monomial: Largest relative residual among the lifted monomial rows.
        rows: Relative residual of every lifted row.
    """

    observable: float
    monomial: float
    rows: np.ndarray


@dataclasses.dataclass(frozen=True)
class TrajectoryError:
    """Pointwise error statistics between two trajectories.

    Attributes:
        max_error: Largest Euclidean error.
        mean_error: Mean Euclidean error.
        normalized_max_error: max_error divided by the largest reference norm.
        normalized_mean_error: mean_error divided by the largest reference norm.
        pointwise: Euclidean error at every sample.
    """

    max_error: float
    mean_error: float
    normalized_max_error: float
    normalized_mean_error: float
    pointwise: np.ndarray


def _least_squares(
    target: np.ndarray, regressor: np.ndarray, rtol: float
) -> tuple[np.ndarray, int]:
    """Solve min ||target - X regressor|| through a truncated pseudo-inverse.

    Args:
        target: Right-hand side rows.
        regressor: Regressor rows.
        rtol: Relative singular value cutoff.

    Returns:
        The coefficient matrix and the retained rank.

    Raises:
        InvalidDataError: if there are no samples.
    """
    if regressor.shape[1] == 0:
        raise InvalidDataError("Snapshot matrices are empty.")
    inverse, rank = linalg.pinv(regressor, atol=0.0, rtol=rtol, return_rank=True)
    return target @ inverse, int(rank)


def _fit_warnings(kind: str, rank: int, rows: int, samples: int) -> tuple[str, ...]:
    """Collect rank and overfit warnings and log them.

    Args:
        kind: Name of the fit for messages.
        rank: Retained regressor rank.
        rows: Regressor row count.
        samples: Number of samples.

    Returns:
        The warnings.
    """
    messages = []
    if rank < rows:
        messages.append(f"rank-deficient regressor: rank {rank} < {rows}")
    if samples < rows:
        messages.append(f"overfit regime: {samples} samples for {rows} unknowns per row")
    for message in messages:
        logger.warning("%s fit: %s", kind, message)
    return tuple(messages)


def fit_dmd(pairs: SnapshotPairs, rtol: float = DEFAULT_SVD_RTOL) -> LinearModel:
    """Fit the least-squares propagator D = Φ̂ Φ⁺.

    Args:
        pairs: Snapshot pairs.
        rtol: Relative singular value cutoff of the pseudo-inverse.

    Returns:
        The DMD model.
    """
    D, rank = _least_squares(pairs.phi_hat, pairs.phi, rtol)
    warnings = _fit_warnings(DMD, rank, pairs.dim, pairs.count)
    return LinearModel(D=D, dt=pairs.dt, kind=DMD, rank=rank, warnings=warnings)


def lift(basis: MonomialBasis, states: np.ndarray) -> np.ndarray:
    """Stack states on top of their monomial features.

    Args:
        basis: Monomial basis.
        states: d×m states.

    Returns:
        The (d+M)×m lifted states.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    return np.vstack([states, basis_module.eval_features(basis, states)])


def fit_edmd(pairs: SnapshotPairs, k: int, rtol: float = DEFAULT_SVD_RTOL) -> LinearModel:
    """Fit a propagator on states lifted by all monomials of degree 2..k.

    Args:
        pairs: Snapshot pairs.
        k: Highest monomial degree.
        rtol: Relative singular value cutoff of the pseudo-inverse.

    Returns:
        The EDMD model.
    """
    lift_basis = basis_module.enumerate_monomials(pairs.dim, 2, k)
    lifted = lift(lift_basis, pairs.phi)
    D, rank = _least_squares(lift(lift_basis, pairs.phi_hat), lifted, rtol)
    warnings = _fit_warnings(EDMD, rank, lifted.shape[0], pairs.count)
    return LinearModel(
        D=D, dt=pairs.dt, kind=EDMD, basis=lift_basis, rank=rank, warnings=warnings
    )


def predict(model: LinearModel, phi0: np.ndarray, n: int) -> np.ndarray:
    """Iterate the propagator from an initial observable state.

    Args:
        model: DMD or EDMD model.
        phi0: Initial state, d-vector.
        n: Number of steps.

    Returns:
        The d×(n+1) trajectory; column 0 is phi0.

    Raises:
        InvalidDataError: if phi0 does not match the model dimension.
    """
    phi0 = np.asarray(phi0, dtype=float).ravel()
    if phi0.size != model.dim:
        raise InvalidDataError(f"Initial state has {phi0.size} entries, expected {model.dim}.")
    state = lift(model.basis, phi0)[:, 0] if model.basis is not None else phi0
    trajectory = np.empty((model.dim, n + 1))
    trajectory[:, 0] = phi0
    for step in range(1, n + 1):
        state = model.D @ state
        trajectory[:, step] = state[: model.dim]
    return trajectory


def sort_eigenvalues(eigenvalues: np.ndarray) -> np.ndarray:
    """Sort eigenvalues by decreasing modulus, then increasing argument.

    Args:
        eigenvalues: Complex eigenvalues.

    Returns:
        The sorted eigenvalues.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    moduli = np.round(np.abs(eigenvalues), 12)
    angles = np.round(np.angle(eigenvalues), 12)
    order = sorted(range(eigenvalues.size), key=lambda i: (-moduli[i], angles[i]))
    return eigenvalues[order]


def spectrum(model: LinearModel) -> np.ndarray:
    """Eigenvalues of the fitted propagator.

    Args:
        model: DMD or EDMD model.

    Returns:
        Complex eigenvalues sorted by decreasing modulus, then increasing argument.
    """
    return sort_eigenvalues(linalg.eigvals(model.D))


def matrix_logarithm(matrix: np.ndarray, dt: float) -> np.ndarray:
    """Compute L with expm(L dt) = matrix on the principal branch.

    Args:
        matrix: Square real matrix.
        dt: Sampling step.

    Returns:
        The real generator L.

    Raises:
        LogarithmBranchError: if an eigenvalue lies on the closed negative real axis.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    eigenvalues, vectors = linalg.eig(matrix)
    scale = max(float(np.max(np.abs(eigenvalues), initial=0.0)), 1e-300)
    for value in eigenvalues:
        if abs(value.imag) <= 1e-12 * scale and value.real <= 0:
            raise LogarithmBranchError(
                f"Eigenvalue {value.real} has no real principal logarithm."
            )
    if np.linalg.cond(vectors) < EIGEN_LOG_CONDITION_LIMIT:
        generator = vectors @ np.diag(np.log(eigenvalues)) @ np.linalg.inv(vectors)
    else:
        generator = linalg.logm(matrix)
    return np.real(generator) / dt


def continuous_generator(model: LinearModel) -> np.ndarray:
    """Continuous-time generator of a fitted propagator.

    Args:
        model: DMD or EDMD model.

    Returns:
        The matrix L with expm(L dt) ≈ D.
    """
    return matrix_logarithm(model.D, model.dt)


def fit_polynomial_dynamics(
    pairs: SnapshotPairs, k: int, rtol: float = DEFAULT_SVD_RTOL
) -> PolynomialDynamics:
    """Regress Φ̂ ≈ B Φ + q K(Φ) with monomials of degree 2..k.

    Args:
        pairs: Snapshot pairs.
        k: Highest monomial degree.
        rtol: Relative singular value cutoff.

    Returns:
        The polynomial map.
    """
    poly_basis = basis_module.enumerate_monomials(pairs.dim, 2, k)
    regressor = lift(poly_basis, pairs.phi)
    coefficients, rank = _least_squares(pairs.phi_hat, regressor, rtol)
    warnings = _fit_warnings("polynomial", rank, regressor.shape[0], pairs.count)
    return PolynomialDynamics(
        B=coefficients[:, : pairs.dim],
        q=coefficients[:, pairs.dim :],
        basis=poly_basis,
        dt=pairs.dt,
        warnings=warnings,
    )


def fit_polynomial_vector_field(
    states: np.ndarray, rates: np.ndarray, k: int, rtol: float = DEFAULT_SVD_RTOL
) -> PolynomialDynamics:
    """Regress time derivatives on states: ẋ ≈ B x + q K(x).

    Args:
        states: d×m states.
        rates: d×m time derivatives at the states.
        k: Highest monomial degree.
        rtol: Relative singular value cutoff.

    Returns:
        The polynomial vector field.

    Raises:
        InvalidDataError: if the matrices disagree.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    if states.shape != rates.shape:
        raise InvalidDataError(f"State and rate shapes differ: {states.shape}, {rates.shape}.")
    poly_basis = basis_module.enumerate_monomials(states.shape[0], 2, k)
    regressor = lift(poly_basis, states)
    coefficients, rank = _least_squares(rates, regressor, rtol)
    warnings = _fit_warnings("vector field", rank, regressor.shape[0], states.shape[1])
    return PolynomialDynamics(
        B=coefficients[:, : states.shape[0]],
        q=coefficients[:, states.shape[0] :],
        basis=poly_basis,
        warnings=warnings,
    )


def count_spectral_peaks(
    series: np.ndarray, prominence: float = DEFAULT_PEAK_PROMINENCE
) -> int:
    """Count dominant peaks in the power spectrum of a scalar series.

    Args:
        series: Samples.
        prominence: Minimum peak prominence as a fraction of the largest power.

    Returns:
        Number of peaks.
    """
    series = np.asarray(series, dtype=float)
    if series.size < 4:
        return 0
    _, power = signal.periodogram(series, window="hann", detrend="constant")
    top = float(np.max(power, initial=0.0))
    if top <= 0:
        return 0
    peaks, _ = signal.find_peaks(power, prominence=prominence * top)
    return int(peaks.size)


def data_diagnostics(
    pairs: SnapshotPairs,
    d: int,
    prominence: float = DEFAULT_PEAK_PROMINENCE,
    rank_rtol: float = DEFAULT_RANK_RTOL,
) -> DataDiagnostics:
    """Report rank, conditioning and dominant frequencies of snapshot data.

    Args:
        pairs: Snapshot pairs.
        d: Target model dimension.
        prominence: Peak prominence as a fraction of the largest power.
        rank_rtol: Singular values below rank_rtol times the largest count as zero.

    Returns:
        The diagnostics.
    """
    singular_values = linalg.svdvals(pairs.phi) if pairs.count else np.zeros(0)
    top = float(singular_values[0]) if singular_values.size else 0.0
    rank = int(np.sum(singular_values > rank_rtol * top)) if top > 0 else 0
    smallest = float(singular_values[-1]) if singular_values.size else 0.0
    condition = top / smallest if smallest > 0 else np.inf
    counts = tuple(count_spectral_peaks(row, prominence) for row in pairs.phi)
    dominant = max(counts, default=0)
    flags = []
    if rank < d:
        flags.append(f"rank {rank} below target dimension {d}")
    supported = math.ceil(d / 2)
    if dominant > supported:
        flags.append(
            f"{dominant} dominant frequencies exceed the {supported} supported by dimension {d}"
        )
    for flag in flags:
        logger.warning("Data diagnostics: %s", flag)
    return DataDiagnostics(
        rank=rank,
        condition_number=condition,
        singular_values=singular_values,
        frequency_counts=counts,
        dominant_frequencies=dominant,
        flags=tuple(flags),
    )


def closure_defect(
    pairs: SnapshotPairs, k: int, rtol: float = DEFAULT_SVD_RTOL
) -> ClosureDefect:
    """Measure how far the lifted monomials are from evolving linearly.

    Args:
        pairs: Snapshot pairs.
        k: Highest monomial degree.
        rtol: Relative singular value cutoff.

    Returns:
        Relative EDMD residuals per lifted row.
    """
    model = fit_edmd(pairs, k, rtol)
    assert model.basis is not None  # nosec
    lifted = lift(model.basis, pairs.phi)
    lifted_hat = lift(model.basis, pairs.phi_hat)
    residual = lifted_hat - model.D @ lifted
    norms = np.linalg.norm(lifted_hat, axis=1)
    rows = np.linalg.norm(residual, axis=1) / np.where(norms > 0, norms, 1.0)
    return ClosureDefect(
        observable=float(rows[: pairs.dim].max()),
        monomial=float(rows[pairs.dim :].max(initial=0.0)),
        rows=rows,
    )


def modal_summary(eigenvalues: np.ndarray, dt: float) -> list[dict[str, float]]:
    """Convert discrete eigenvalues to continuous rates, frequencies and damping ratios.

    Args:
        eigenvalues: Discrete-time eigenvalues.
        dt: Sampling step.

    Returns:
        One record per eigenvalue with keys real, imag, modulus, rate, frequency, damping.
    """
    records = []
    for value in np.asarray(eigenvalues, dtype=complex):
        rate = np.log(value) / dt if value != 0 else complex(-np.inf, 0.0)
        natural = abs(rate)
        damping = -rate.real / natural if np.isfinite(natural) and natural else 0.0
        records.append(
            {
                "real": float(value.real),
                "imag": float(value.imag),
                "modulus": float(abs(value)),
                "rate": float(rate.real),
                "frequency": float(rate.imag),
                "damping": float(damping),
            }
        )
    return records


def trajectory_error(reference: np.ndarray, prediction: np.ndarray) -> TrajectoryError:
    """Compare a prediction against a reference trajectory sample by sample.

    Args:
        reference: d×n reference trajectory.
        prediction: d×n predicted trajectory.

    Returns:
        The error statistics.

    Raises:
        InvalidDataError: if the shapes differ.
    """
    reference = np.atleast_2d(reference)
    prediction = np.atleast_2d(prediction)
    if reference.shape != prediction.shape:
        raise InvalidDataError(
            f"Trajectory shapes differ: {reference.shape} and {prediction.shape}."
        )
    pointwise = np.linalg.norm(reference - prediction, axis=0)
    scale = float(np.max(np.linalg.norm(reference, axis=0), initial=0.0)) or 1.0
    return TrajectoryError(
        max_error=float(pointwise.max(initial=0.0)),
        mean_error=float(pointwise.mean()) if pointwise.size else 0.0,
        normalized_max_error=float(pointwise.max(initial=0.0)) / scale,
        normalized_mean_error=(float(pointwise.mean()) if pointwise.size else 0.0) / scale,
        pointwise=pointwise,
    )
