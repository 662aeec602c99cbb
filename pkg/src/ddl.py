# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Data-driven linearization: polynomial coordinates in which the data evolves linearly.

A model carries the linear map B together with two coefficient blocks over the monomial
basis K of degrees 2..k:

    γ = κ⁻¹(φ) = φ + Q K(φ)        (linearizing direction)
    φ = κ(γ)   = γ + Qinv K(γ)     (inverse direction, ℓ(γ) = Qinv K(γ))

and is fitted by minimizing the invariance error of the transformed data plus ν times the
round-trip error of the coordinate pair.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy import linalg

import basis as basis_module
import linfit
import optimize
import series
from basis import MonomialBasis
from linfit import SnapshotPairs

logger = logging.getLogger(__name__)

DEFAULT_NU = 1.0
DEFAULT_TOL = 1e-18
DEFAULT_MAX_ITER = 500
DEFAULT_RESONANCE_TOL = 1e-8
DEFAULT_VALIDITY_TOL = 1e-4
HULL_SAMPLES = 1000
ANALYTIC_JACOBIAN = "analytic"
FINITE_DIFFERENCE_JACOBIAN = "finite-difference"


class DdlError(Exception):
    """Base exception for data-driven linearization errors."""


class DivergenceError(DdlError):
    """Represents non-finite residuals during optimization.

    Attributes:
        msg: Explanation of the error.
        term: The cost term that became non-finite.
    """

    def __init__(self, msg: str, term: str):
        """Initialize a new instance of the DivergenceError exception.

        Args:
            msg: Explanation of the error.
            term: The cost term that became non-finite.
        """
        super().__init__(msg)
        self.msg = msg
        self.term = term


class ResonanceError(DdlError):
    """Represents a (near-)resonant denominator in the analytic recursion.

    Attributes:
        msg: Explanation of the error.
        exponent: Multi-index of the resonant monomial.
        eigenvalue: The eigenvalue it resonates with.
    """

    def __init__(self, msg: str, exponent: tuple[int, ...], eigenvalue: complex):
        """Initialize a new instance of the ResonanceError exception.

        Args:
            msg: Explanation of the error.
            exponent: Multi-index of the resonant monomial.
            eigenvalue: The eigenvalue it resonates with.
        """
        super().__init__(msg)
        self.msg = msg
        self.exponent = exponent
        self.eigenvalue = eigenvalue


class ModelShapeError(DdlError):
    """Represents data or coefficients that do not match a model.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ModelShapeError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


@dataclasses.dataclass(frozen=True)
class TrainingHull:
    """Axis-aligned bounding box of training states.

    Attributes:
        lower: Lower corner.
        upper: Upper corner.
    """

    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_states(cls, *states: np.ndarray) -> "TrainingHull":
        """Build the box around state matrices.

        Args:
            states: d×m matrices.

        Returns:
            The bounding box.
        """
        stacked = np.hstack([np.atleast_2d(block) for block in states])
        return cls(lower=stacked.min(axis=1), upper=stacked.max(axis=1))

    def contains(self, states: np.ndarray) -> np.ndarray:
        """Flag states inside the box.

        Args:
            states: d×m matrix.

        Returns:
            Boolean vector of length m.
        """
        states = _as_columns(states)
        inside = (states >= self.lower[:, None]) & (states <= self.upper[:, None])
        return np.all(inside, axis=0)

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        """Draw uniform samples from the box.

        Args:
            count: Number of samples.
            seed: Random seed.

        Returns:
            d×count samples.
        """
        rng = np.random.default_rng(seed)
        return rng.uniform(self.lower[:, None], self.upper[:, None], (self.lower.size, count))


@dataclasses.dataclass(frozen=True)
class FitReport:
    """Summary of a DDL optimization.

    Attributes:
        cost: Final combined cost.
        invariance_cost: Final invariance term.
        inverse_cost: Final round-trip term (unweighted).
        iterations: Trial steps taken.
        converged: Whether a stopping criterion other than max_iter was met.
        initial_cost: Combined cost at the DMD seed.
        reason: Stopping reason.
        gradient_norm: Max-norm of the gradient at the end.
        inverse_consistency: Largest relative round-trip error on hull samples.
    """

    cost: float
    invariance_cost: float
    inverse_cost: float
    iterations: int
    converged: bool
    initial_cost: float
    reason: str = ""
    gradient_norm: float = 0.0
    inverse_consistency: float = 0.0


@dataclasses.dataclass(frozen=True)
class DdlModel:
    """A fitted data-driven linearization.

    Attributes:
        basis: Monomial basis of degrees 2..k.
        B: Discrete-time linear map of the linearized coordinates.
        Q: Coefficients of the linearizing map κ⁻¹.
        Qinv: Coefficients of the inverse map κ.
        dt: Sampling step.
        nu: Weight of the round-trip term used in training.
        hull: Bounding box of the training states.
        report: Fit report, absent for analytic models.
    """

    basis: MonomialBasis
    B: np.ndarray
    Q: np.ndarray
    Qinv: np.ndarray
    dt: float
    nu: float = DEFAULT_NU
    hull: typing.Optional[TrainingHull] = None
    report: typing.Optional[FitReport] = None

    @property
    def dim(self) -> int:
        """Reduced dimension d.

        Returns:
            The dimension.
        """
        return self.basis.dim

    @property
    def order(self) -> int:
        """Polynomial order k.

        Returns:
            The highest monomial degree.
        """
        return self.basis.max_degree


class Costs(typing.NamedTuple):
    """The DDL cost terms.

    Attributes:
        invariance: Invariance error of the transformed data.
        inverse: Round-trip error of the coordinate pair.
        total: invariance + ν inverse.
    """

    invariance: float
    inverse: float
    total: float


@dataclasses.dataclass(frozen=True)
class ValidityDomain:
    """Round-trip check of κ∘κ⁻¹ on sample states.

    Attributes:
        mask: Samples passing the check.
        errors: Round-trip error of every sample.
        radius: Largest origin-centered radius free of failing samples.
    """

    mask: np.ndarray
    errors: np.ndarray
    radius: float


def _as_columns(states: np.ndarray) -> np.ndarray:
    """View a vector or matrix of states as columns.

    Args:
        states: A d-vector or d×m matrix.

    Returns:
        A d×m float matrix.
    """
    array = np.asarray(states, dtype=float)
    return array[:, None] if array.ndim == 1 else array


class _Problem:
    """Residuals and Jacobians of the DDL cost for fixed data.

    Parameters are packed as (Q, Qinv, B), each flattened row-major.
    """

    def __init__(self, pairs: SnapshotPairs, basis: MonomialBasis, nu: float):
        """Precompute the data features.

        Args:
            pairs: Snapshot pairs.
            basis: Monomial basis of degrees 2..k.
            nu: Weight of the round-trip term.
        """
        self.phi = pairs.phi
        self.phi_hat = pairs.phi_hat
        self.basis = basis
        self.dim = basis.dim
        self.size = len(basis)
        self.sqrt_nu = np.sqrt(nu)
        self.features = basis_module.eval_features(basis, pairs.phi)
        self.features_hat = basis_module.eval_features(basis, pairs.phi_hat)

    def pack(self, Q: np.ndarray, Qinv: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Flatten model blocks into one parameter vector.

        Args:
            Q: Linearizing coefficients.
            Qinv: Inverse coefficients.
            B: Linear map.

        Returns:
            The parameter vector.
        """
        return np.concatenate([Q.ravel(), Qinv.ravel(), B.ravel()])

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a parameter vector into model blocks.

        Args:
            x: Parameter vector.

        Returns:
            Q, Qinv and B.
        """
        block = self.dim * self.size
        Q = x[:block].reshape(self.dim, self.size)
        Qinv = x[block : 2 * block].reshape(self.dim, self.size)
        B = x[2 * block :].reshape(self.dim, self.dim)
        return Q, Qinv, B

    def terms(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate both residual blocks.

        Args:
            x: Parameter vector.

        Returns:
            Invariance residuals and unweighted round-trip residuals, both d×m.

        Raises:
            DivergenceError: if a block is not finite.
        """
        Q, Qinv, B = self.unpack(x)
        linearized = self.phi + Q @ self.features
        invariance = self.phi_hat + Q @ self.features_hat - B @ linearized
        if not np.all(np.isfinite(invariance)):
            raise DivergenceError("Non-finite residuals in the invariance term.", "invariance")
        inverse = Q @ self.features + Qinv @ basis_module.eval_features(self.basis, linearized)
        if not np.all(np.isfinite(inverse)):
            raise DivergenceError("Non-finite residuals in the inverse term.", "inverse")
        return invariance, inverse

    def residual(self, x: np.ndarray) -> np.ndarray:
        """Stack residuals column by column: invariance block, then weighted inverse block.

        Args:
            x: Parameter vector.

        Returns:
            The residual vector of length 2dm.
        """
        invariance, inverse = self.terms(x)
        return np.vstack([invariance, self.sqrt_nu * inverse]).T.ravel()

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Assemble the analytic residual Jacobian.

        Args:
            x: Parameter vector.

        Returns:
            Matrix of shape (2dm, parameter count).
        """
        Q, Qinv, B = self.unpack(x)
        d, size = self.dim, self.size
        count = self.phi.shape[1]
        eye = np.eye(d)
        linearized = self.phi + Q @ self.features
        lin_features = basis_module.eval_features(self.basis, linearized)
        lin_jacobians = basis_module.eval_feature_jacobians(self.basis, linearized)
        block = d * size
        jac = np.zeros((count, 2 * d, 2 * block + d * d))
        jac[:, :d, :block] = (
            np.einsum("ac,bi->iacb", eye, self.features_hat)
            - np.einsum("ac,bi->iacb", B, self.features)
        ).reshape(count, d, block)
        jac[:, :d, 2 * block :] = -np.einsum("ac,bi->iacb", eye, linearized).reshape(
            count, d, d * d
        )
        chain = eye[None, :, :] + np.einsum("aj,ijc->iac", Qinv, lin_jacobians)
        jac[:, d:, :block] = self.sqrt_nu * np.einsum(
            "iac,bi->iacb", chain, self.features
        ).reshape(count, d, block)
        jac[:, d:, block : 2 * block] = self.sqrt_nu * np.einsum(
            "ac,bi->iacb", eye, lin_features
        ).reshape(count, d, block)
        return jac.reshape(count * 2 * d, -1)

    def finite_difference_jacobian(self, x: np.ndarray) -> np.ndarray:
        """Central-difference Jacobian of the residual.

        Args:
            x: Parameter vector.

        Returns:
            Matrix of shape (2dm, parameter count).
        """
        return optimize.finite_difference_jacobian(self.residual, x)


def _check_pairs(model: DdlModel, pairs: SnapshotPairs) -> None:
    """Check that snapshot data matches a model.

    Args:
        model: The model.
        pairs: Snapshot pairs.

    Raises:
        ModelShapeError: if the dimensions differ.
    """
    if pairs.dim != model.dim:
        raise ModelShapeError(f"Data dimension {pairs.dim} does not match model {model.dim}.")


def cost(model: DdlModel, pairs: SnapshotPairs) -> Costs:
    """Evaluate the invariance, round-trip and combined costs.

    Args:
        model: The model.
        pairs: Snapshot pairs.

    Returns:
        The three cost values.
    """
    _check_pairs(model, pairs)
    problem = _Problem(pairs, model.basis, model.nu)
    invariance, inverse = problem.terms(problem.pack(model.Q, model.Qinv, model.B))
    first = float(np.sum(invariance**2))
    second = float(np.sum(inverse**2))
    return Costs(invariance=first, inverse=second, total=first + model.nu * second)


def dmd_seed(
    pairs: SnapshotPairs, k: int, nu: float = DEFAULT_NU, rtol: float = linfit.DEFAULT_SVD_RTOL
) -> DdlModel:
    """Initial model: the DMD map with vanishing nonlinear coefficients.

    Args:
        pairs: Snapshot pairs.
        k: Polynomial order.
        nu: Weight of the round-trip term.
        rtol: Pseudo-inverse cutoff of the DMD fit.

    Returns:
        The seed model.
    """
    dmd = linfit.fit_dmd(pairs, rtol)
    model_basis = basis_module.enumerate_monomials(pairs.dim, 2, k)
    zeros = np.zeros((pairs.dim, len(model_basis)))
    return DdlModel(
        basis=model_basis,
        B=dmd.D,
        Q=zeros,
        Qinv=zeros.copy(),
        dt=pairs.dt,
        nu=nu,
        hull=TrainingHull.from_states(pairs.phi, pairs.phi_hat),
    )


def _with_parameters(model: DdlModel, problem: _Problem, x: np.ndarray) -> DdlModel:
    """Copy a model with new coefficient blocks.

    Args:
        model: Template model.
        problem: Problem that packed the parameters.
        x: Parameter vector.

    Returns:
        The updated model.
    """
    Q, Qinv, B = problem.unpack(x)
    return dataclasses.replace(model, Q=Q.copy(), Qinv=Qinv.copy(), B=B.copy())


def _warn_overfit(pairs: SnapshotPairs, model_basis: MonomialBasis) -> None:
    """Log when residuals are fewer than parameters.

    Args:
        pairs: Snapshot pairs.
        model_basis: Basis of the model.
    """
    parameters = 2 * pairs.dim * len(model_basis) + pairs.dim**2
    residuals = 2 * pairs.dim * pairs.count
    if residuals < parameters:
        logger.warning(
            "Overfit regime: %s residuals for %s parameters", residuals, parameters
        )


def inverse_consistency(model: DdlModel, count: int = HULL_SAMPLES) -> float:
    """Measure the round trip κ(κ⁻¹(φ)) on uniform samples of the training hull.

    Args:
        model: Model with a training hull.
        count: Number of hull samples.

    Returns:
        Largest round-trip error relative to 1 + |φ|, 0 without a hull.
    """
    if model.hull is None:
        return 0.0
    samples = model.hull.sample(count)
    consistency = validity_domain(model, samples, DEFAULT_VALIDITY_TOL)
    relative = consistency.errors / (1 + np.linalg.norm(samples, axis=0))
    return float(relative.max(initial=0.0))


def fit(  # pylint: disable=too-many-arguments
    pairs: SnapshotPairs,
    k: int,
    nu: float = DEFAULT_NU,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    jacobian: str = ANALYTIC_JACOBIAN,
    rtol: float = linfit.DEFAULT_SVD_RTOL,
) -> tuple[DdlModel, FitReport]:
    """Fit B, Q and Qinv by Levenberg-Marquardt from the DMD seed.

    Args:
        pairs: Snapshot pairs.
        k: Polynomial order.
        nu: Weight of the round-trip term.
        tol: Absolute cost tolerance.
        max_iter: Maximum number of trial steps.
        jacobian: "analytic" or "finite-difference".
        rtol: Pseudo-inverse cutoff of the seeding DMD fit.

    Returns:
        The fitted model (with its report attached) and the report.
    """
    seed = dmd_seed(pairs, k, nu, rtol)
    _warn_overfit(pairs, seed.basis)
    problem = _Problem(pairs, seed.basis, nu)
    jacobian_function = (
        problem.finite_difference_jacobian
        if jacobian == FINITE_DIFFERENCE_JACOBIAN
        else problem.jacobian
    )
    result = optimize.levenberg_marquardt(
        problem.residual,
        jacobian_function,
        problem.pack(seed.Q, seed.Qinv, seed.B),
        tol=tol,
        max_iter=max_iter,
    )
    model = _with_parameters(seed, problem, result.x)
    costs = cost(model, pairs)
    report = FitReport(
        cost=costs.total,
        invariance_cost=costs.invariance,
        inverse_cost=costs.inverse,
        iterations=result.iterations,
        converged=result.converged,
        initial_cost=result.initial_cost,
        reason=result.reason,
        gradient_norm=result.gradient_norm,
        inverse_consistency=inverse_consistency(model),
    )
    if not result.converged:
        logger.warning("DDL fit did not converge after %s steps", result.iterations)
    logger.info(
        "DDL fit (d=%s, k=%s): cost %s -> %s, inverse consistency %s",
        pairs.dim,
        k,
        report.initial_cost,
        report.cost,
        report.inverse_consistency,
    )
    model = dataclasses.replace(model, report=report)
    return model, report


def truncate(model: DdlModel, k: int) -> DdlModel:
    """Drop the monomials above degree k from both coordinate maps.

    A fit at a higher order resolves the low-degree Taylor coefficients that a fit at order k
    bends to absorb the missing tail. Degrees are stored in ascending blocks, so truncation
    keeps a column prefix.

    Args:
        model: Model of order at least k.
        k: New polynomial order.

    Returns:
        The truncated model; its report carries the recomputed inverse consistency.

    Raises:
        ModelShapeError: if k is below 2 or above the model order.
    """
    if not 2 <= k <= model.order:
        raise ModelShapeError(f"Cannot truncate an order {model.order} model to order {k}.")
    if k == model.order:
        return model
    truncated_basis = model.basis.restrict(2, k)
    size = len(truncated_basis)
    truncated = dataclasses.replace(
        model,
        basis=truncated_basis,
        Q=model.Q[:, :size].copy(),
        Qinv=model.Qinv[:, :size].copy(),
    )
    consistency = inverse_consistency(truncated)
    logger.info(
        "Truncated DDL model from order %s to %s, inverse consistency %s",
        model.order,
        k,
        consistency,
    )
    if model.report is None:
        return truncated
    return dataclasses.replace(
        truncated, report=dataclasses.replace(model.report, inverse_consistency=consistency)
    )


def first_order_correction(
    pairs: SnapshotPairs, k: int, nu: float = DEFAULT_NU, rtol: float = linfit.DEFAULT_SVD_RTOL
) -> DdlModel:
    """Take one damped Gauss-Newton step from the DMD seed.

    Args:
        pairs: Snapshot pairs.
        k: Polynomial order.
        nu: Weight of the round-trip term.
        rtol: Pseudo-inverse cutoff of the seeding DMD fit.

    Returns:
        The corrected model.
    """
    seed = dmd_seed(pairs, k, nu, rtol)
    problem = _Problem(pairs, seed.basis, nu)
    x = optimize.single_step(
        problem.residual, problem.jacobian, problem.pack(seed.Q, seed.Qinv, seed.B)
    )
    return _with_parameters(seed, problem, x)


def jacobian_check(model: DdlModel, pairs: SnapshotPairs) -> float:
    """Compare the analytic Jacobian against central differences.

    Args:
        model: Model whose parameters are the evaluation point.
        pairs: Snapshot pairs.

    Returns:
        Largest absolute deviation relative to the largest analytic entry.
    """
    _check_pairs(model, pairs)
    problem = _Problem(pairs, model.basis, model.nu)
    x = problem.pack(model.Q, model.Qinv, model.B)
    analytic = problem.jacobian(x)
    numeric = problem.finite_difference_jacobian(x)
    scale = float(np.max(np.abs(analytic), initial=0.0)) or 1.0
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def _warn_outside_hull(model: DdlModel, states: np.ndarray) -> None:
    """Log states outside the training hull.

    Args:
        model: The model.
        states: d×m states.
    """
    if model.hull is None:
        return
    outside = int(np.sum(~model.hull.contains(states)))
    if outside:
        logger.warning("%s state(s) outside the training hull", outside)


def to_linear_coords(model: DdlModel, phi: np.ndarray) -> np.ndarray:
    """Map observable states to linearized coordinates, γ = φ + Q K(φ).

    Args:
        model: The model.
        phi: A d-vector or d×m states.

    Returns:
        γ, shaped like the input.
    """
    states = _as_columns(phi)
    _warn_outside_hull(model, states)
    gamma = states + model.Q @ basis_module.eval_features(model.basis, states)
    return gamma[:, 0] if np.ndim(phi) == 1 else gamma


def from_linear_coords(model: DdlModel, gamma: np.ndarray) -> np.ndarray:
    """Map linearized coordinates to observable states, φ = γ + Qinv K(γ).

    Args:
        model: The model.
        gamma: A d-vector or d×m coordinates.

    Returns:
        φ, shaped like the input.
    """
    coords = _as_columns(gamma)
    phi = coords + model.Qinv @ basis_module.eval_features(model.basis, coords)
    return phi[:, 0] if np.ndim(gamma) == 1 else phi


def predict(model: DdlModel, phi0: np.ndarray, n: int) -> np.ndarray:
    """Predict a trajectory by advancing the linearized coordinates.

    Args:
        model: The model.
        phi0: Initial d-vector.
        n: Number of steps.

    Returns:
        The d×(n+1) trajectory.

    Raises:
        ModelShapeError: if phi0 does not match the model dimension.
    """
    phi0 = np.asarray(phi0, dtype=float).ravel()
    if phi0.size != model.dim:
        raise ModelShapeError(f"Initial state has {phi0.size} entries, expected {model.dim}.")
    gamma = np.empty((model.dim, n + 1))
    gamma[:, 0] = to_linear_coords(model, phi0)
    for step in range(1, n + 1):
        gamma[:, step] = model.B @ gamma[:, step - 1]
    return from_linear_coords(model, gamma)


def validity_domain(
    model: DdlModel, samples: np.ndarray, tol: float = DEFAULT_VALIDITY_TOL
) -> ValidityDomain:
    """Check κ(κ⁻¹(φ)) ≈ φ on sample states.

    A sample passes when the round-trip error is at most tol (1 + |φ|). The radius is the
    smallest norm among failing samples, or the largest sample norm when none fails.

    Args:
        model: The model.
        samples: d×m sample states.
        tol: Relative tolerance.

    Returns:
        The validity report.
    """
    states = _as_columns(samples)
    gamma = states + model.Q @ basis_module.eval_features(model.basis, states)
    round_trip = gamma + model.Qinv @ basis_module.eval_features(model.basis, gamma)
    errors = np.linalg.norm(round_trip - states, axis=0)
    norms = np.linalg.norm(states, axis=0)
    with np.errstate(invalid="ignore"):
        mask = errors <= tol * (1 + norms)
    failing = norms[~mask]
    radius = float(failing.min()) if failing.size else float(norms.max(initial=0.0))
    return ValidityDomain(mask=mask, errors=errors, radius=radius)


def _homological_operator(
    linear: np.ndarray, degree_basis: MonomialBasis, discrete: bool
) -> np.ndarray:
    """Matrix of the linear action on homogeneous monomials of one degree.

    For flows it represents d/dt K_n(γ) along γ̇ = Bγ; for maps K_n(Bγ) in terms of K_n(γ).

    Args:
        linear: Linear part B.
        degree_basis: Basis of one total degree.
        discrete: Whether B is a map.

    Returns:
        Matrix N with the action K_n ↦ N K_n.
    """
    if discrete:
        return series.linear_substitution(degree_basis, degree_basis, linear)
    index = {exponent: position for position, exponent in enumerate(degree_basis.exponents)}
    operator = np.zeros((len(degree_basis), len(degree_basis)))
    for row, exponent in enumerate(degree_basis.exponents):
        for first, power in enumerate(exponent):
            if not power:
                continue
            for second in range(degree_basis.dim):
                shifted = list(exponent)
                shifted[first] -= 1
                shifted[second] += 1
                operator[row, index[tuple(shifted)]] += power * linear[first, second]
    return operator


def _check_resonance(
    eigenvalues: np.ndarray, degree_basis: MonomialBasis, discrete: bool, threshold: float
) -> None:
    """Reject near-resonant denominators of one degree.

    Args:
        eigenvalues: Eigenvalues of the linear part.
        degree_basis: Basis of one total degree.
        discrete: Whether the linear part is a map.
        threshold: Absolute denominator threshold.

    Raises:
        ResonanceError: if a denominator falls below the threshold.
    """
    for exponent in degree_basis.exponents:
        powers = np.array(exponent)
        if discrete:
            combination = complex(np.prod(eigenvalues**powers))
        else:
            combination = complex(np.sum(eigenvalues * powers))
        for eigenvalue in eigenvalues:
            if abs(combination - eigenvalue) < threshold:
                raise ResonanceError(
                    f"Resonant denominator for k={exponent} and eigenvalue {eigenvalue}.",
                    exponent,
                    complex(eigenvalue),
                )


def infer_basis(dim: int, size: int) -> MonomialBasis:
    """Find the degree 2..k basis with a given length.

    Args:
        dim: Number of variables.
        size: Basis length.

    Returns:
        The basis.

    Raises:
        ModelShapeError: if no order matches.
    """
    for order in range(2, 64):
        count = basis_module.monomial_count(dim, 2, order)
        if count == size:
            return basis_module.enumerate_monomials(dim, 2, order)
        if count > size:
            break
    raise ModelShapeError(f"No monomial basis in {dim} variables has {size} terms.")


def analytic_linearize(  # pylint: disable=too-many-arguments
    B: np.ndarray,
    q: np.ndarray,
    r: int,
    q_basis: typing.Optional[MonomialBasis] = None,
    discrete: bool = False,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
) -> np.ndarray:
    """Taylor coefficients of ℓ linearizing polynomial dynamics, order by order.

    For flows ẋ = Bx + q K(x) it solves Dℓ(γ) Bγ = B ℓ(γ) + q K(γ + ℓ(γ)); for maps
    x ↦ Bx + q K(x) it solves ℓ(Bγ) = B ℓ(γ) + q K(γ + ℓ(γ)). The degree-n block of ℓ only
    depends on lower degrees through the right-hand side, so each degree is one Sylvester
    solve.

    Args:
        B: Linear part, d×d.
        q: Nonlinear coefficients over q_basis.
        r: Highest degree of ℓ.
        q_basis: Basis of q; inferred from its shape when omitted.
        discrete: Whether the dynamics is a map.
        resonance_tol: Denominators below resonance_tol |B| raise.

    Returns:
        Coefficients of ℓ over the degree 2..r basis.

    Raises:
        ModelShapeError: if q does not match the basis.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    dim = B.shape[0]
    if q_basis is None:
        q_basis = infer_basis(dim, q.shape[1])
    if q.shape != (dim, len(q_basis)):
        raise ModelShapeError(f"Coefficients of shape {q.shape} do not match the basis.")
    eigenvalues = linalg.eigvals(B)
    threshold = resonance_tol * float(np.linalg.norm(B, 2))
    out_basis = basis_module.enumerate_monomials(dim, 2, r)
    ell = np.zeros((dim, len(out_basis)))
    for degree in range(2, r + 1):
        degree_basis = basis_module.enumerate_monomials(dim, degree, degree)
        _check_resonance(eigenvalues, degree_basis, discrete, threshold)
        inner = series.to_dense(ell, out_basis, degree, with_identity=True)
        image = series.compose(q, q_basis, inner, degree)
        rhs = series.from_dense(image, degree_basis)
        operator = _homological_operator(B, degree_basis, discrete)
        ell[:, out_basis.degree_slice(degree)] = linalg.solve_sylvester(-B, operator, rhs)
    return ell


def analytic_model(  # pylint: disable=too-many-arguments
    B: np.ndarray,
    q: np.ndarray,
    r: int,
    dt: float,
    q_basis: typing.Optional[MonomialBasis] = None,
    discrete: bool = False,
) -> DdlModel:
    """Build a model from the analytic linearization of known polynomial dynamics.

    Args:
        B: Linear part.
        q: Nonlinear coefficients.
        r: Truncation order.
        dt: Sampling step of the model.
        q_basis: Basis of q.
        discrete: Whether the dynamics is a map with step dt.

    Returns:
        Model with Qinv = ℓ and Q its series inverse.
    """
    ell = analytic_linearize(B, q, r, q_basis=q_basis, discrete=discrete)
    model_basis = basis_module.enumerate_monomials(np.atleast_2d(B).shape[0], 2, r)
    inverse = series.invert_series(ell, model_basis, r)
    linear = np.atleast_2d(B) if discrete else linalg.expm(np.atleast_2d(B) * dt)
    return DdlModel(basis=model_basis, B=linear, Q=inverse, Qinv=ell, dt=dt)
