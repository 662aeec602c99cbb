# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Periodic response of linearized models to harmonic forcing.

In linearized coordinates a forced model reads

    γ̇ = B γ + ε (I + Dℓ(γ))⁻¹ F cos Ωt

with B the continuous generator and ℓ the inverse-direction polynomial of a DDL model.
Periodic orbits are found by shooting in the rescaled time τ = Ωt, over which one period
is [0, 2π] for every frequency, and continued in Ω by pseudo-arclength steps.
"""

import dataclasses
import logging
import math
import typing

import numpy as np
import pandas as pd
from scipy import integrate, linalg, optimize

import basis as basis_module
import linfit
from basis import MonomialBasis
from config import ContinuationSettings, FrequencyRange
from ddl import DdlModel, TrainingHull

logger = logging.getLogger(__name__)

INTEGRATION_RTOL = 1e-10
INTEGRATION_ATOL = 1e-12
SINGULAR_CONDITION = 1e12
RESONANCE_RTOL = 1e-12
DDL = "ddl"
DMD = "dmd"
APPROX_DDL = "approx-ddl"


class ForcedResponseError(Exception):
    """Represents an error while computing a forced response."""


class SingularForcingError(ForcedResponseError):
    """Exception raised when I + Dℓ(γ) cannot be inverted.

    Attributes:
        msg: Explanation of the error.
        condition: Condition number of I + Dℓ(γ).
    """

    def __init__(self, msg: str, condition: float):
        """Initialize a new instance of the SingularForcingError exception.

        Args:
            msg: Explanation of the error.
            condition: Condition number of I + Dℓ(γ).
        """
        super().__init__(msg)
        self.msg = msg
        self.condition = condition


class ShootingError(ForcedResponseError):
    """Exception raised when no periodic orbit is found.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ShootingError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class ResonanceSingularityError(ForcedResponseError):
    """Exception raised when the forcing frequency hits an eigenvalue of B.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the ResonanceSingularityError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


@dataclasses.dataclass(frozen=True)
class ForcedReducedModel:  # pylint: disable=too-many-instance-attributes
    """A linearized model with single-harmonic forcing.

    Attributes:
        B: Continuous generator.
        basis: Monomial basis of ℓ.
        Qinv: Coefficients of ℓ.
        Q: Coefficients of the linearizing direction.
        forcing: Cosine amplitude vector F.
        epsilon: Forcing amplitude.
        omega: Forcing frequency.
        hull: Bounding box of the training states.
    """

    B: np.ndarray
    basis: MonomialBasis
    Qinv: np.ndarray
    Q: np.ndarray
    forcing: np.ndarray
    epsilon: float = 0.0
    omega: float = 1.0
    hull: typing.Optional[TrainingHull] = None

    def __post_init__(self) -> None:
        """Check shapes and the forcing amplitude.

        Raises:
            ForcedResponseError: if the forcing is inconsistent.
        """
        forcing = np.asarray(self.forcing, dtype=float).ravel()
        if forcing.size != self.basis.dim:
            raise ForcedResponseError(
                f"Forcing vector has {forcing.size} entries, expected {self.basis.dim}."
            )
        if self.epsilon < 0:
            raise ForcedResponseError(
                f"Forcing amplitude must be non-negative, got {self.epsilon}."
            )
        object.__setattr__(self, "forcing", forcing)

    @classmethod
    def from_ddl(
        cls, model: DdlModel, forcing: np.ndarray, epsilon: float = 0.0, omega: float = 1.0
    ) -> "ForcedReducedModel":
        """Force a fitted discrete-time model.

        Args:
            model: The model.
            forcing: Cosine amplitude vector in linearized coordinates.
            epsilon: Forcing amplitude.
            omega: Forcing frequency.

        Returns:
            The forced model with B the logarithm of the fitted map.
        """
        return cls(
            B=linfit.matrix_logarithm(model.B, model.dt),
            basis=model.basis,
            Qinv=model.Qinv,
            Q=model.Q,
            forcing=forcing,
            epsilon=epsilon,
            omega=omega,
            hull=model.hull,
        )

    @classmethod
    def linear(
        cls, B: np.ndarray, forcing: np.ndarray, epsilon: float = 0.0, omega: float = 1.0
    ) -> "ForcedReducedModel":
        """Force a linear generator, ℓ = 0.

        Args:
            B: Continuous generator.
            forcing: Cosine amplitude vector.
            epsilon: Forcing amplitude.
            omega: Forcing frequency.

        Returns:
            The forced linear model.
        """
        B = np.atleast_2d(np.asarray(B, dtype=float))
        zero_basis = basis_module.enumerate_monomials(B.shape[0], 2, 2)
        zeros = np.zeros((B.shape[0], len(zero_basis)))
        return cls(
            B=B,
            basis=zero_basis,
            Qinv=zeros,
            Q=zeros.copy(),
            forcing=forcing,
            epsilon=epsilon,
            omega=omega,
        )

    @property
    def dim(self) -> int:
        """Dimension.

        Returns:
            d.
        """
        return self.basis.dim

    @property
    def period(self) -> float:
        """Forcing period.

        Returns:
            2π / Ω.
        """
        return 2 * math.pi / self.omega

    @property
    def is_linear(self) -> bool:
        """Whether ℓ vanishes.

        Returns:
            True for ℓ = 0.
        """
        return not np.any(self.Qinv)

    def with_forcing(
        self, epsilon: typing.Optional[float] = None, omega: typing.Optional[float] = None
    ) -> "ForcedReducedModel":
        """Copy with another forcing amplitude or frequency.

        Args:
            epsilon: New amplitude.
            omega: New frequency.

        Returns:
            The updated model.
        """
        return dataclasses.replace(
            self,
            epsilon=self.epsilon if epsilon is None else epsilon,
            omega=self.omega if omega is None else omega,
        )

    def observables(self, gamma: np.ndarray) -> np.ndarray:
        """Map linearized coordinates to observables, φ = γ + ℓ(γ).

        Args:
            gamma: A d-vector or d×m coordinates.

        Returns:
            φ, shaped like the input.
        """
        coords = np.asarray(gamma, dtype=float)
        columns = coords[:, None] if coords.ndim == 1 else coords
        phi = columns + self.Qinv @ basis_module.eval_features(self.basis, columns)
        return phi[:, 0] if coords.ndim == 1 else phi


@dataclasses.dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic solution of the forced model.

    Attributes:
        omega: Forcing frequency.
        gamma0: State at t = 0.
        monodromy: Derivative of the period map at gamma0.
        residual: Periodicity residual max-norm.
        iterations: Newton iterations used.
    """

    omega: float
    gamma0: np.ndarray
    monodromy: np.ndarray
    residual: float
    iterations: int = 0

    @property
    def multipliers(self) -> np.ndarray:
        """Floquet multipliers.

        Returns:
            Eigenvalues of the monodromy matrix.
        """
        return linalg.eigvals(self.monodromy)

    @property
    def stable(self) -> bool:
        """Whether every multiplier lies inside the unit circle.

        Returns:
            Linear stability of the orbit.
        """
        return bool(np.all(np.abs(self.multipliers) < 1))


@dataclasses.dataclass(frozen=True)
class FrcPoint:
    """One point of a forced response curve.

    Attributes:
        omega: Forcing frequency.
        amplitude: Largest observable norm over one period.
        gamma0: Orbit anchor at t = 0.
        multipliers: Floquet multipliers.
        stable: Linear stability.
        fold: Whether Ω turns back at this point.
    """

    omega: float
    amplitude: float
    gamma0: np.ndarray
    multipliers: np.ndarray
    stable: bool
    fold: bool = False


@dataclasses.dataclass(frozen=True)
class FrcBranch:
    """A forced response curve.

    Attributes:
        points: Points in continuation order.
        epsilon: Forcing amplitude.
        kind: "ddl", "dmd" or "approx-ddl".
        truncated: Whether continuation stopped before the end of the range.
    """

    points: tuple[FrcPoint, ...]
    epsilon: float
    kind: str = DDL
    truncated: bool = False

    @property
    def omegas(self) -> np.ndarray:
        """Frequencies.

        Returns:
            One per point.
        """
        return np.array([point.omega for point in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        """Amplitudes.

        Returns:
            One per point.
        """
        return np.array([point.amplitude for point in self.points])

    @property
    def folds(self) -> list[int]:
        """Indices of fold points.

        Returns:
            Point indices.
        """
        return [index for index, point in enumerate(self.points) if point.fold]

    @property
    def peak_omega(self) -> float:
        """Frequency of the largest amplitude.

        Returns:
            Ω at the peak.
        """
        return float(self.omegas[int(np.argmax(self.amplitudes))])

    def to_frame(self) -> pd.DataFrame:
        """Tabulate the branch.

        Returns:
            Frame with columns omega, amplitude, stable, fold.
        """
        return pd.DataFrame(
            {
                "omega": self.omegas,
                "amplitude": self.amplitudes,
                "stable": [point.stable for point in self.points],
                "fold": [point.fold for point in self.points],
            }
        )

    def anchors(self) -> dict[str, typing.Any]:
        """Restart record of the branch.

        Returns:
            JSON-ready dictionary with the orbit anchors.
        """
        return {
            "kind": self.kind,
            "epsilon": self.epsilon,
            "truncated": self.truncated,
            "points": [
                {
                    "omega": point.omega,
                    "gamma0": point.gamma0.tolist(),
                    "multipliers": [[value.real, value.imag] for value in point.multipliers],
                }
                for point in self.points
            ],
        }


def _forcing_operator(model: ForcedReducedModel, gamma: np.ndarray) -> np.ndarray:
    """Assemble I + Dℓ(γ) and check its conditioning.

    Args:
        model: The forced model.
        gamma: State.

    Returns:
        The matrix.

    Raises:
        SingularForcingError: if its condition number exceeds the singularity threshold.
    """
    operator = np.eye(model.dim) + model.Qinv @ basis_module.eval_feature_jacobian(
        model.basis, gamma
    )
    condition = float(np.linalg.cond(operator))
    if not condition < SINGULAR_CONDITION:
        raise SingularForcingError(
            f"I + Dℓ(γ) is singular (condition {condition:.3g}); the orbit left the "
            "validity domain.",
            condition,
        )
    return operator


def forced_field(model: ForcedReducedModel, gamma: np.ndarray, t: float) -> np.ndarray:
    """Evaluate γ̇ = B γ + ε (I + Dℓ(γ))⁻¹ F cos Ωt.

    Args:
        model: The forced model.
        gamma: State.
        t: Time.

    Returns:
        The time derivative.
    """
    gamma = np.asarray(gamma, dtype=float)
    drift = model.B @ gamma
    if model.epsilon == 0:
        return drift
    operator = _forcing_operator(model, gamma)
    scale = model.epsilon * math.cos(model.omega * t)
    return drift + scale * linalg.solve(operator, model.forcing)


def forced_jacobian(model: ForcedReducedModel, gamma: np.ndarray, t: float) -> np.ndarray:
    """Derivative of the forced field with respect to γ.

    Args:
        model: The forced model.
        gamma: State.
        t: Time.

    Returns:
        The d×d Jacobian.
    """
    gamma = np.asarray(gamma, dtype=float)
    if model.epsilon == 0 or model.is_linear:
        return model.B.copy()
    return model.B + _forcing_derivative(model, gamma, model.epsilon * math.cos(model.omega * t))


def _forcing_derivative(model: ForcedReducedModel, gamma: np.ndarray, scale: float) -> np.ndarray:
    """Derivative of scale (I + Dℓ(γ))⁻¹ F with respect to γ.

    Args:
        model: The forced model.
        gamma: State.
        scale: ε cos Ωt.

    Returns:
        The d×d derivative.
    """
    operator = _forcing_operator(model, gamma)
    response = linalg.solve(operator, model.forcing)
    hessian = basis_module.eval_feature_hessian(model.basis, gamma)
    curvature = model.Qinv @ np.einsum("maj,a->mj", hessian, response)
    return -scale * linalg.solve(operator, curvature)


def _augmented_rhs(model: ForcedReducedModel, omega: float) -> typing.Callable:
    """Right-hand side of the state, its γ-sensitivity and its Ω-sensitivity in τ = Ωt.

    Args:
        model: The forced model.
        omega: Forcing frequency.

    Returns:
        Function of (τ, y) with y = (γ, Φ row-major, s).
    """
    dim = model.dim

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        gamma = y[:dim]
        sensitivity = y[dim : dim + dim * dim].reshape(dim, dim)
        frequency_sensitivity = y[dim + dim * dim :]
        scale = model.epsilon * math.cos(tau)
        field = model.B @ gamma
        jacobian = model.B
        if model.epsilon:
            operator = _forcing_operator(model, gamma)
            field = field + scale * linalg.solve(operator, model.forcing)
            if not model.is_linear:
                jacobian = model.B + _forcing_derivative(model, gamma, scale)
        return np.concatenate(
            [
                field / omega,
                (jacobian @ sensitivity).ravel() / omega,
                jacobian @ frequency_sensitivity / omega - field / omega**2,
            ]
        )

    return rhs


@dataclasses.dataclass(frozen=True)
class _PeriodMap:
    """Period map evaluation.

    Attributes:
        residual: φ_T(γ0) − γ0.
        monodromy: ∂φ_T/∂γ0.
        frequency_derivative: ∂φ_T/∂Ω.
        solution: Dense solution over τ ∈ [0, 2π].
    """

    residual: np.ndarray
    monodromy: np.ndarray
    frequency_derivative: np.ndarray
    solution: typing.Any


def _period_map(model: ForcedReducedModel, gamma0: np.ndarray, omega: float) -> _PeriodMap:
    """Integrate one forcing period with sensitivities.

    Args:
        model: The forced model.
        gamma0: Initial state.
        omega: Forcing frequency.

    Returns:
        The period map and its derivatives.

    Raises:
        ShootingError: if the integration fails.
    """
    dim = model.dim
    y0 = np.concatenate([gamma0, np.eye(dim).ravel(), np.zeros(dim)])
    solution = integrate.solve_ivp(
        _augmented_rhs(model, omega),
        (0.0, 2 * math.pi),
        y0,
        method="DOP853",
        rtol=INTEGRATION_RTOL,
        atol=INTEGRATION_ATOL,
        dense_output=True,
    )
    if solution.status < 0:
        raise ShootingError(f"Integration over one period failed: {solution.message}")
    final = solution.y[:, -1]
    return _PeriodMap(
        residual=final[:dim] - gamma0,
        monodromy=final[dim : dim + dim * dim].reshape(dim, dim),
        frequency_derivative=final[dim + dim * dim :],
        solution=solution,
    )


def linear_response(
    B: np.ndarray, forcing: np.ndarray, epsilon: float, omega: float
) -> np.ndarray:
    """Complex amplitude z of the harmonic response γ(t) = Re(z e^{iΩt}) of a linear model.

    Args:
        B: Continuous generator.
        forcing: Cosine amplitude vector.
        epsilon: Forcing amplitude.
        omega: Forcing frequency.

    Returns:
        z = ε (iΩ I − B)⁻¹ F.

    Raises:
        ResonanceSingularityError: if iΩ is an eigenvalue of B.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    eigenvalues = linalg.eigvals(B)
    scale = max(float(np.linalg.norm(B, 2)), 1.0)
    if np.min(np.abs(eigenvalues - 1j * omega)) <= RESONANCE_RTOL * scale:
        raise ResonanceSingularityError(f"Forcing frequency {omega} is an eigenvalue of B.")
    resolvent = 1j * omega * np.eye(B.shape[0]) - B
    return epsilon * linalg.solve(resolvent, np.asarray(forcing, dtype=complex))


def shoot_periodic(
    model: ForcedReducedModel,
    omega: float,
    gamma_guess: typing.Optional[np.ndarray] = None,
    tol: float = 1e-9,
    max_iter: int = 25,
) -> PeriodicOrbit:
    """Find the periodic orbit at one forcing frequency by Newton shooting.

    Args:
        model: The forced model.
        omega: Forcing frequency.
        gamma_guess: Initial guess of the state at t = 0; the linear response when absent.
        tol: Periodicity residual tolerance.
        max_iter: Newton iterations.

    Returns:
        The orbit.

    Raises:
        ShootingError: if Newton does not converge or meets a singular Jacobian.
    """
    model = model.with_forcing(omega=omega)
    if gamma_guess is None:
        gamma_guess = np.real(linear_response(model.B, model.forcing, model.epsilon, omega))
    gamma = np.array(gamma_guess, dtype=float)
    for iteration in range(max_iter + 1):
        period_map = _period_map(model, gamma, omega)
        residual = float(np.max(np.abs(period_map.residual)))
        logger.debug("Shooting at Ω=%s, iteration %s: residual %s", omega, iteration, residual)
        if residual <= tol:
            return PeriodicOrbit(
                omega=omega,
                gamma0=gamma,
                monodromy=period_map.monodromy,
                residual=residual,
                iterations=iteration,
            )
        if iteration == max_iter:
            break
        try:
            gamma = gamma - linalg.solve(
                period_map.monodromy - np.eye(model.dim), period_map.residual
            )
        except linalg.LinAlgError as exc:
            logger.error("Singular shooting Jacobian at Ω=%s, %s", omega, exc)
            raise ShootingError(
                f"Singular shooting Jacobian at Ω={omega}; switch to arclength continuation."
            ) from exc
    raise ShootingError(f"Shooting at Ω={omega} did not converge after {max_iter} iterations.")


def _peak_norm(function: typing.Callable[[float], float], samples: int) -> float:
    """Largest value of a 2π-periodic function, grid search then bounded refinement.

    Args:
        function: Periodic scalar function of τ.
        samples: Grid size.

    Returns:
        The maximum.
    """
    grid = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    values = np.array([function(tau) for tau in grid])
    best = int(np.argmax(values))
    width = 2 * math.pi / samples
    refined = optimize.minimize_scalar(
        lambda tau: -function(tau),
        bounds=(grid[best] - width, grid[best] + width),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return max(float(values[best]), float(-refined.fun))


def orbit_amplitude(
    model: ForcedReducedModel, solution: typing.Any, samples: int = 256
) -> float:
    """Largest observable norm along a periodic orbit.

    Args:
        model: The forced model.
        solution: Dense solution over τ ∈ [0, 2π] whose first d components are γ.
        samples: Grid size.

    Returns:
        max ‖φ(t)‖ over one period.
    """
    dim = model.dim

    def norm(tau: float) -> float:
        gamma = solution.sol(tau % (2 * math.pi))[:dim]
        return float(np.linalg.norm(model.observables(gamma)))

    return _peak_norm(norm, samples)


def _warn_outside_hull(model: ForcedReducedModel, solution: typing.Any, omega: float) -> bool:
    """Warn when an orbit leaves the training hull.

    Args:
        model: The forced model.
        solution: Dense orbit solution.
        omega: Forcing frequency.

    Returns:
        Whether the orbit left the hull.
    """
    if model.hull is None:
        return False
    taus = np.linspace(0.0, 2 * math.pi, 32)
    phi = model.observables(solution.sol(taus)[: model.dim])
    if np.all(model.hull.contains(phi)):
        return False
    logger.warning(
        "Forced orbit at Ω=%s leaves the training hull; neglected O(ε|φ|²) forcing terms may"
        " matter",
        omega,
    )
    return True


def _null_tangent(period_map: _PeriodMap, direction: float) -> np.ndarray:
    """Unit tangent of the solution curve of the periodicity condition.

    Args:
        period_map: Period map at the current point.
        direction: Desired sign of the Ω component.

    Returns:
        Unit vector in (γ, Ω).
    """
    dim = period_map.residual.size
    matrix = np.column_stack(
        [period_map.monodromy - np.eye(dim), period_map.frequency_derivative]
    )
    _, _, right = linalg.svd(matrix)
    tangent = right[-1]
    return tangent if tangent[-1] * direction >= 0 else -tangent


def _correct(
    model: ForcedReducedModel,
    predicted: np.ndarray,
    tangent: np.ndarray,
    settings: ContinuationSettings,
) -> typing.Optional[tuple[np.ndarray, _PeriodMap, int]]:
    """Newton correction on the hyperplane orthogonal to the tangent.

    Args:
        model: The forced model.
        predicted: Predicted (γ, Ω).
        tangent: Unit tangent.
        settings: Continuation parameters.

    Returns:
        The corrected point, its period map and the iterations used, or None on failure.
    """
    dim = model.dim
    point = predicted.copy()
    for iteration in range(settings.max_newton + 1):
        if point[-1] <= 0:
            return None
        try:
            period_map = _period_map(model, point[:dim], float(point[-1]))
        except ForcedResponseError as exc:
            logger.debug("Correction failed, %s", exc)
            return None
        if float(np.max(np.abs(period_map.residual))) <= settings.newton_tol:
            return point, period_map, iteration
        if iteration == settings.max_newton:
            break
        jacobian = np.vstack(
            [
                np.column_stack(
                    [period_map.monodromy - np.eye(dim), period_map.frequency_derivative]
                ),
                tangent,
            ]
        )
        rhs = np.concatenate([period_map.residual, [tangent @ (point - predicted)]])
        try:
            point = point - linalg.solve(jacobian, rhs)
        except linalg.LinAlgError:
            return None
    return None


def _make_point(
    model: ForcedReducedModel, point: np.ndarray, period_map: _PeriodMap, samples: int
) -> FrcPoint:
    """Measure a converged continuation point.

    Args:
        model: The forced model.
        point: (γ0, Ω).
        period_map: Its period map.
        samples: Samples per period.

    Returns:
        The branch point.
    """
    multipliers = linalg.eigvals(period_map.monodromy)
    return FrcPoint(
        omega=float(point[-1]),
        amplitude=orbit_amplitude(model, period_map.solution, samples),
        gamma0=point[:-1].copy(),
        multipliers=multipliers,
        stable=bool(np.all(np.abs(multipliers) < 1)),
    )


def _mark_folds(points: list[FrcPoint]) -> tuple[FrcPoint, ...]:
    """Flag points where Ω changes direction along the branch.

    Args:
        points: Branch points.

    Returns:
        The points with fold flags.
    """
    omegas = np.array([point.omega for point in points])
    steps = np.sign(np.diff(omegas))
    marked = list(points)
    for index in range(1, len(points) - 1):
        if steps[index - 1] * steps[index] < 0:
            marked[index] = dataclasses.replace(points[index], fold=True)
    return tuple(marked)


def continue_frc(  # pylint: disable=too-many-locals
    model: ForcedReducedModel,
    omega_range: FrequencyRange,
    epsilon: float,
    settings: typing.Optional[ContinuationSettings] = None,
    gamma_guess: typing.Optional[np.ndarray] = None,
) -> FrcBranch:
    """Continue periodic orbits in the forcing frequency by pseudo-arclength steps.

    The branch starts at omega_range.start and follows the solution curve of the
    periodicity condition in (γ0, Ω) with a secant predictor, halving the step on failed
    corrections and growing it after quick ones, until Ω leaves the range.

    Args:
        model: The forced model.
        omega_range: Frequency window.
        epsilon: Forcing amplitude.
        settings: Continuation parameters.
        gamma_guess: Guess of the first orbit anchor.

    Returns:
        The branch; truncated when the step underflows or the point budget runs out.
    """
    settings = settings or ContinuationSettings()
    model = model.with_forcing(epsilon=epsilon)
    direction = 1.0 if omega_range.end > omega_range.start else -1.0
    orbit = shoot_periodic(
        model, omega_range.start, gamma_guess, settings.newton_tol, settings.max_newton
    )
    current = np.concatenate([orbit.gamma0, [omega_range.start]])
    period_map = _period_map(model, orbit.gamma0, omega_range.start)
    points = [_make_point(model, current, period_map, settings.samples)]
    tangent = _null_tangent(period_map, direction)
    left_hull = _warn_outside_hull(model, period_map.solution, omega_range.start)
    step = settings.initial_step
    truncated = False
    while True:
        if len(points) >= settings.max_points:
            logger.warning("Continuation stopped at the point budget of %s", settings.max_points)
            truncated = True
            break
        corrected = _correct(model, current + step * tangent, tangent, settings)
        if corrected is None:
            step /= 2
            if step < settings.min_step:
                logger.warning(
                    "Continuation step underflow at Ω=%s; branch truncated", current[-1]
                )
                truncated = True
                break
            continue
        candidate, period_map, iterations = corrected
        if not omega_range.contains(float(candidate[-1])):
            break
        secant = candidate - current
        tangent = secant / np.linalg.norm(secant)
        current = candidate
        points.append(_make_point(model, current, period_map, settings.samples))
        if not left_hull:
            left_hull = _warn_outside_hull(model, period_map.solution, float(current[-1]))
        logger.debug("Branch point Ω=%s after %s corrections", current[-1], iterations)
        if iterations <= 3:
            step = min(1.5 * step, settings.max_step)
    branch = FrcBranch(
        points=_mark_folds(points), epsilon=epsilon, kind=DDL, truncated=truncated
    )
    logger.info(
        "Forced response branch at ε=%s: %s points, %s fold(s)",
        epsilon,
        len(branch.points),
        len(branch.folds),
    )
    return branch


def _linear_point(B: np.ndarray, response: np.ndarray, omega: float, amplitude: float) -> FrcPoint:
    """Branch point of a harmonic response of a linear model.

    Args:
        B: Continuous generator.
        response: Complex amplitude z.
        omega: Forcing frequency.
        amplitude: Measured amplitude.

    Returns:
        The point with multipliers exp(λ 2π/Ω).
    """
    multipliers = np.exp(linalg.eigvals(B) * 2 * math.pi / omega)
    return FrcPoint(
        omega=omega,
        amplitude=amplitude,
        gamma0=np.real(response),
        multipliers=multipliers,
        stable=bool(np.all(np.abs(multipliers) < 1)),
    )


def _frequency_grid(omega_range: FrequencyRange, step: float) -> list[float]:
    """Sweep frequencies.

    Args:
        omega_range: Frequency window.
        step: Grid spacing.

    Returns:
        The frequencies.
    """
    return omega_range.values(step)


def dmd_frc(
    B: np.ndarray,
    forcing: np.ndarray,
    epsilon: float,
    omega_range: FrequencyRange,
    step: float = 0.002,
) -> FrcBranch:
    """Closed-form harmonic response of the linear model γ̇ = B γ + ε F cos Ωt.

    Args:
        B: Continuous generator.
        forcing: Cosine amplitude vector.
        epsilon: Forcing amplitude.
        omega_range: Frequency window.
        step: Frequency spacing.

    Returns:
        The single-valued branch.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    points = []
    for omega in _frequency_grid(omega_range, step):
        response = linear_response(B, forcing, epsilon, omega)
        # largest ‖Re(z e^{iτ})‖ over τ
        amplitude = math.sqrt(
            max(0.5 * (float(np.vdot(response, response).real) + abs(response @ response)), 0.0)
        )
        points.append(_linear_point(B, response, omega, amplitude))
    return FrcBranch(points=tuple(points), epsilon=epsilon, kind=DMD)


def approx_ddl_frc(
    model: ForcedReducedModel,
    omega_range: FrequencyRange,
    epsilon: float,
    step: float = 0.002,
    samples: int = 256,
) -> FrcBranch:
    """Harmonic response of the linear γ dynamics mapped through φ = γ + ℓ(γ).

    Args:
        model: The forced model.
        omega_range: Frequency window.
        epsilon: Forcing amplitude.
        step: Frequency spacing.
        samples: Samples per period.

    Returns:
        The single-valued branch.
    """
    points = []
    for omega in _frequency_grid(omega_range, step):
        response = linear_response(model.B, model.forcing, epsilon, omega)

        def norm(tau: float, response: np.ndarray = response) -> float:
            return float(np.linalg.norm(model.observables(np.real(response * np.exp(1j * tau)))))

        points.append(_linear_point(model.B, response, omega, _peak_norm(norm, samples)))
    return FrcBranch(points=tuple(points), epsilon=epsilon, kind=APPROX_DDL)


def simulate_forced(
    model: ForcedReducedModel, gamma0: np.ndarray, periods: int, samples: int = 64
) -> np.ndarray:
    """Integrate the forced model over whole periods.

    Args:
        model: The forced model.
        gamma0: State at t = 0.
        periods: Number of forcing periods.
        samples: Output samples per period.

    Returns:
        d×(periods·samples + 1) states.

    Raises:
        ForcedResponseError: if the integration fails.
    """
    end = periods * model.period
    times = np.linspace(0.0, end, periods * samples + 1)
    solution = integrate.solve_ivp(
        lambda t, gamma: forced_field(model, gamma, t),
        (0.0, end),
        np.asarray(gamma0, dtype=float),
        method="DOP853",
        t_eval=times,
        rtol=INTEGRATION_RTOL,
        atol=INTEGRATION_ATOL,
    )
    if solution.status < 0:
        raise ForcedResponseError(f"Forced integration failed: {solution.message}")
    return solution.y
