# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Levenberg-Marquardt minimization of sums of squared residuals."""

import dataclasses
import logging
import typing

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

ResidualFunction = typing.Callable[[np.ndarray], np.ndarray]
JacobianFunction = typing.Callable[[np.ndarray], np.ndarray]

INITIAL_DAMPING = 1e-3
DAMPING_FACTOR = 10.0
MAX_DAMPING = 1e16
RELATIVE_DECREASE_TOL = 1e-12
GRADIENT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class LeastSquaresResult:
    """Outcome of a Levenberg-Marquardt run.

    Attributes:
        x: Final parameter vector.
        cost: Final sum of squared residuals.
        initial_cost: Sum of squared residuals at the starting point.
        iterations: Number of trial steps taken.
        converged: Whether a convergence criterion was met.
        reason: Stopping reason.
        gradient_norm: Max-norm of the gradient at the final point.
    """

    x: np.ndarray
    cost: float
    initial_cost: float
    iterations: int
    converged: bool
    reason: str
    gradient_norm: float


@dataclasses.dataclass
class _Iterate:
    """Mutable optimizer state.

    Attributes:
        x: Current parameters.
        residual: Residual at x.
        cost: Sum of squares at x.
        damping: Current damping.
        trials: Trial steps taken so far.
    """

    x: np.ndarray
    residual: np.ndarray
    cost: float
    damping: float
    trials: int = 0


def finite_difference_jacobian(
    residual: ResidualFunction, x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Approximate the residual Jacobian by central differences.

    Args:
        residual: Residual function.
        x: Evaluation point.
        step: Relative perturbation size.

    Returns:
        Jacobian matrix of shape (len(residual(x)), len(x)).
    """
    columns = []
    for index in range(x.size):
        delta = step * max(1.0, abs(x[index]))
        forward = x.copy()
        backward = x.copy()
        forward[index] += delta
        backward[index] -= delta
        columns.append((residual(forward) - residual(backward)) / (2 * delta))
    return np.stack(columns, axis=1)


def marquardt_scales(jacobian: np.ndarray) -> np.ndarray:
    """Column norms of the Jacobian, floored away from zero.

    Args:
        jacobian: Residual Jacobian.

    Returns:
        Positive scale per parameter.
    """
    scales = np.linalg.norm(jacobian, axis=0)
    floor = 1e-12 * max(float(scales.max(initial=0.0)), 1e-300)
    return np.maximum(scales, floor)


def descent_step(
    residual: ResidualFunction, state: _Iterate, jacobian: np.ndarray, max_trials: int
) -> bool:
    """Raise the damping until a damped Gauss-Newton step lowers the cost.

    The damped subproblem is solved on the QR factor of the Jacobian, which avoids squaring
    its condition number. On success the state moves to the accepted point and the damping
    drops by the damping factor.

    Args:
        residual: Residual function.
        state: Optimizer state, updated in place.
        jacobian: Jacobian at state.x.
        max_trials: Trial budget.

    Returns:
        Whether a step was accepted.
    """
    scales = marquardt_scales(jacobian)
    q_factor, r_factor = linalg.qr(jacobian, mode="economic")
    projected = q_factor.T @ state.residual
    size = jacobian.shape[1]
    while state.trials < max_trials and state.damping <= MAX_DAMPING:
        state.trials += 1
        system = np.vstack([r_factor, np.sqrt(state.damping) * np.diag(scales)])
        rhs = np.concatenate([-projected, np.zeros(size)])
        step, *_ = linalg.lstsq(system, rhs)
        trial = state.x + step
        trial_residual = residual(trial)
        trial_cost = float(trial_residual @ trial_residual)
        if trial_cost < state.cost:
            state.x, state.residual, state.cost = trial, trial_residual, trial_cost
            state.damping /= DAMPING_FACTOR
            return True
        state.damping *= DAMPING_FACTOR
    return False


def levenberg_marquardt(
    residual: ResidualFunction,
    jacobian: JacobianFunction,
    x0: np.ndarray,
    *,
    tol: float = 1e-18,
    max_iter: int = 500,
    damping: float = INITIAL_DAMPING,
) -> LeastSquaresResult:
    """Minimize ||residual(x)||² with Marquardt-scaled Levenberg-Marquardt steps.

    Damping is multiplied by 10 on a rejected step and divided by 10 on an accepted one.
    The run stops when the cost drops to tol, when an accepted step lowers the cost by less
    than a relative 1e-12, when the residual is orthogonal to the Jacobian range, when no
    descent step exists below the damping ceiling, or after max_iter trial steps.

    Args:
        residual: Residual function.
        jacobian: Jacobian of the residual function.
        x0: Starting parameters.
        tol: Absolute cost tolerance.
        max_iter: Maximum number of trial steps.
        damping: Initial damping.

    Returns:
        The optimization result.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    state = _Iterate(x=x, residual=r, cost=float(r @ r), damping=damping)
    initial_cost = state.cost
    gradient_norm = np.inf
    reason, converged = "maximum iterations reached", False
    while state.trials < max_iter:
        if state.cost <= tol:
            reason, converged = "cost tolerance reached", True
            break
        jac = jacobian(state.x)
        gradient_norm = float(np.max(np.abs(jac.T @ state.residual), initial=0.0))
        scale = float(marquardt_scales(jac).max()) * np.sqrt(state.cost)
        if gradient_norm <= GRADIENT_TOL * scale:
            reason, converged = "gradient stagnation", True
            break
        previous = state.cost
        if not descent_step(residual, state, jac, max_iter):
            if state.damping > MAX_DAMPING:
                reason, converged = "no descent step below damping ceiling", True
            break
        logger.debug("Step %s: cost %s, damping %s", state.trials, state.cost, state.damping)
        if previous - state.cost <= RELATIVE_DECREASE_TOL * previous:
            reason, converged = "relative cost decrease below tolerance", True
            break
    logger.info(
        "Levenberg-Marquardt stopped after %s steps: %s (cost %s -> %s)",
        state.trials,
        reason,
        initial_cost,
        state.cost,
    )
    return LeastSquaresResult(
        x=state.x,
        cost=state.cost,
        initial_cost=initial_cost,
        iterations=state.trials,
        converged=converged,
        reason=reason,
        gradient_norm=gradient_norm,
    )


def single_step(
    residual: ResidualFunction,
    jacobian: JacobianFunction,
    x0: np.ndarray,
    damping: float = INITIAL_DAMPING,
) -> np.ndarray:
    """Take exactly one accepted damped Gauss-Newton step.

    Args:
        residual: Residual function.
        jacobian: Jacobian of the residual function.
        x0: Starting parameters.
        damping: Initial damping.

    Returns:
        The stepped parameters, or x0 when no step lowers the cost.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    state = _Iterate(x=x, residual=r, cost=float(r @ r), damping=damping)
    jac = jacobian(x)
    if np.linalg.matrix_rank(jac) < jac.shape[1]:
        logger.warning(
            "Singular normal equations (rank %s < %s); step regularized by damping",
            np.linalg.matrix_rank(jac),
            jac.shape[1],
        )
    if state.cost > 0:
        descent_step(residual, state, jac, max_trials=64)
    return state.x
