# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Reference dynamical systems and their integrators."""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import integrate as scipy_integrate
from scipy import linalg

import basis as basis_module
from linfit import PolynomialDynamics
from reduce import Trajectory

logger = logging.getLogger(__name__)

ODE = "ode"
MAP = "map"
RK4 = "RK4"
ADAPTIVE_METHODS = ("RK45", "DOP853")
INTEGRATION_TOL = 1e-10
RANK_RTOL = 1e-8

VectorField = typing.Callable[[float, np.ndarray], np.ndarray]
StateMap = typing.Callable[[np.ndarray], np.ndarray]


class TestbedError(Exception):
    """Represents an error raised by the testbed."""


class UnknownSystemError(TestbedError):
    """Exception raised for unknown system names or parameters.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the UnknownSystemError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


class IntegrationError(TestbedError):
    """Exception raised when a trajectory cannot be computed.

    Attributes:
        msg: Explanation of the error.
    """

    def __init__(self, msg: str):
        """Initialize a new instance of the IntegrationError exception.

        Args:
            msg: Explanation of the error.
        """
        super().__init__(msg)
        self.msg = msg


@dataclasses.dataclass(frozen=True)
class SystemSpec:  # pylint: disable=too-many-instance-attributes
    """A reference system.

    Attributes:
        name: Registry name.
        kind: "ode" (function(t, x) is the vector field) or "map" (function(t, x) is the
            next state).
        dim: State dimension.
        function: Right-hand side, vectorized over d×m states.
        parameters: Parameter record.
        fixed_point: Known fixed point.
        eigenvalues: Spectrum of the linearization at the fixed point.
        observable: Map from states to observables.
        inverse_observable: Map from observables back to states.
        metadata: Further known quantities.
    """

    name: str
    kind: str
    dim: int
    function: VectorField
    parameters: dict[str, float]
    fixed_point: typing.Optional[np.ndarray] = None
    eigenvalues: typing.Optional[np.ndarray] = None
    observable: typing.Optional[StateMap] = None
    inverse_observable: typing.Optional[StateMap] = None
    metadata: dict[str, typing.Any] = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class ObservableCheck:
    """Nondegeneracy check of a linear observable on the slow subspace.

    Attributes:
        name: Observable name.
        matrix: The observable as a 2×n matrix.
        restricted: Its restriction to the slow subspace.
        rank: Numerical rank of the restriction.
        degenerate: Whether the rank is below the subspace dimension.
    """

    name: str
    matrix: np.ndarray
    restricted: np.ndarray
    rank: int
    degenerate: bool


def _affine(matrix: np.ndarray, offset: np.ndarray) -> StateMap:
    """Build x ↦ matrix (x − offset) acting on vectors or columns.

    Args:
        matrix: Linear part.
        offset: Subtracted point.

    Returns:
        The map.
    """

    def apply(states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        shift = offset if states.ndim == 1 else offset[:, None]
        return matrix @ (states - shift)

    return apply


def stuart_landau_radial() -> SystemSpec:
    """Radial Stuart-Landau flow Ṙ = R − R³ around the limit cycle R = 1.

    Observables are φ = R − 1, in which φ̇ = −2φ − 3φ² − φ³.

    Returns:
        The system.
    """

    def field(_t: float, x: np.ndarray) -> np.ndarray:
        return x - x**3

    return SystemSpec(
        name="stuart-landau",
        kind=ODE,
        dim=1,
        function=field,
        parameters={},
        fixed_point=np.array([1.0]),
        eigenvalues=np.array([-2.0 + 0j]),
        observable=lambda states: np.asarray(states, dtype=float) - 1.0,
        inverse_observable=lambda phi: np.asarray(phi, dtype=float) + 1.0,
        metadata={"fixed_points": (0.0, 1.0), "turning_point": math.sqrt(2) / 2},
    )


def three_d_nonnormal_map(
    a: float = 0.45 * math.sqrt(3),
    b: float = 0.5,
    c: float = 0.6,
    theta1: float = 1.5,
    theta2: float = 0.0,
) -> SystemSpec:
    """Linear map x ↦ R Λ R⁻¹ x with a skewed real eigendirection, seen through y(x).

    The observable is y_i = x_i + 0.1 (x_i² + x_j x_k) with {i, j, k} = {1, 2, 3}.

    Args:
        a: Real part of the complex pair.
        b: Imaginary part of the complex pair.
        c: Real eigenvalue.
        theta1: First skew angle.
        theta2: Second skew angle.

    Returns:
        The system.
    """
    block = np.array([[a, -b, 0.0], [b, a, 0.0], [0.0, 0.0, c]])
    skew = np.array(
        [
            [1.0, 0.0, math.sin(theta1) * math.cos(theta2)],
            [0.0, 1.0, math.sin(theta1) * math.sin(theta2)],
            [0.0, 0.0, math.cos(theta2)],
        ]
    )
    matrix = skew @ block @ linalg.inv(skew)

    def step(_t: float, x: np.ndarray) -> np.ndarray:
        return matrix @ x

    def observe(states: np.ndarray) -> np.ndarray:
        x = np.asarray(states, dtype=float)
        x1, x2, x3 = x[0], x[1], x[2]
        return np.stack(
            [
                x1 + 0.1 * (x1**2 + x2 * x3),
                x2 + 0.1 * (x2**2 + x1 * x3),
                x3 + 0.1 * (x3**2 + x1 * x2),
            ]
        )

    return SystemSpec(
        name="3d-map",
        kind=MAP,
        dim=3,
        function=step,
        parameters={"a": a, "b": b, "c": c, "theta1": theta1, "theta2": theta2},
        fixed_point=np.zeros(3),
        eigenvalues=np.array([complex(a, b), complex(a, -b), complex(c, 0.0)]),
        observable=observe,
        metadata={"matrix": matrix},
    )


def _duffing_transform(d: float) -> np.ndarray:
    """Real eigenbasis of the Duffing linearization at (1, 0).

    Columns are Im v and Re v for the unit eigenvector v of the upper eigenvalue with its
    second entry real and positive, so the transformed linear part is [[−α, −ω], [ω, −α]].

    Args:
        d: Damping coefficient.

    Returns:
        The 2×2 transform T with state − (1, 0) = T φ.
    """
    jacobian = np.array([[0.0, 1.0], [-2.0, -d]])
    eigenvalues, vectors = linalg.eig(jacobian)
    vector = vectors[:, int(np.argmax(eigenvalues.imag))]
    vector = vector / np.linalg.norm(vector)
    vector = vector * np.exp(-1j * np.angle(vector[1]))
    return np.column_stack([vector.imag, vector.real])


def duffing(d: float = 0.0141, epsilon: float = 0.0, omega: float = 1.4142) -> SystemSpec:
    """Forced damped Duffing oscillator ẋ = y, ẏ = x − x³ − d y + ε cos Ωt.

    Observables are the shifted, block-diagonalized coordinates φ = T⁻¹ ((x, y) − (1, 0)).

    Args:
        d: Damping coefficient.
        epsilon: Forcing amplitude.
        omega: Forcing frequency.

    Returns:
        The system.
    """

    def field(t: float, x: np.ndarray) -> np.ndarray:
        position, velocity = x[0], x[1]
        force = position - position**3 - d * velocity + epsilon * np.cos(omega * t)
        return np.stack([velocity, force])

    fixed_point = np.array([1.0, 0.0])
    transform = _duffing_transform(d)
    inverse = linalg.inv(transform)
    decay = d / 2
    frequency = math.sqrt(2 - d**2 / 4)
    return SystemSpec(
        name="duffing",
        kind=ODE,
        dim=2,
        function=field,
        parameters={"d": d, "epsilon": epsilon, "omega": omega},
        fixed_point=fixed_point,
        eigenvalues=np.array([complex(-decay, frequency), complex(-decay, -frequency)]),
        observable=_affine(inverse, fixed_point),
        inverse_observable=lambda phi: _inverse_affine(transform, fixed_point, phi),
        metadata={
            "transform": transform,
            "forcing": inverse @ np.array([0.0, 1.0]),
            "frequency": frequency,
            "decay": decay,
        },
    )


def _inverse_affine(matrix: np.ndarray, offset: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Evaluate offset + matrix φ on vectors or columns.

    Args:
        matrix: Linear part.
        offset: Added point.
        phi: Coordinates.

    Returns:
        The states.
    """
    phi = np.asarray(phi, dtype=float)
    return matrix @ phi + (offset if phi.ndim == 1 else offset[:, None])


def duffing_hamiltonian(states: np.ndarray) -> np.ndarray:
    """Energy of the undamped, unforced Duffing oscillator.

    Args:
        states: (x, y) vector or 2×m columns.

    Returns:
        y²/2 − x²/2 + x⁴/4.
    """
    states = np.asarray(states, dtype=float)
    return states[1] ** 2 / 2 - states[0] ** 2 / 2 + states[0] ** 4 / 4


def duffing_polynomial(d: float = 0.0141) -> PolynomialDynamics:
    """Exact unforced Duffing vector field in φ coordinates, φ̇ = A φ + q K(φ).

    With u = (T φ)_1 the displacement from x = 1, the nonlinearity is T⁻¹ (0, −3u² − u³).

    Args:
        d: Damping coefficient.

    Returns:
        The vector field with q over monomials of degree 2..3.
    """
    transform = _duffing_transform(d)
    inverse = linalg.inv(transform)
    jacobian = np.array([[0.0, 1.0], [-2.0, -d]])
    linear = inverse @ jacobian @ transform
    poly_basis = basis_module.enumerate_monomials(2, 2, 3)
    weights = {2: -3.0, 3: -1.0}
    row = np.zeros(len(poly_basis))
    for column, (first, second) in enumerate(poly_basis.exponents):
        degree = first + second
        row[column] = (
            weights[degree]
            * math.comb(degree, first)
            * transform[0, 0] ** first
            * transform[0, 1] ** second
        )
    return PolynomialDynamics(B=linear, q=np.outer(inverse[:, 1], row), basis=poly_basis)


def _chain_stiffness(masses: int, boundary: str) -> np.ndarray:
    """Nearest-neighbour stiffness matrix of a unit spring chain.

    Args:
        masses: Number of masses.
        boundary: "fixed-free" or "fixed-fixed".

    Returns:
        The stiffness matrix.

    Raises:
        UnknownSystemError: if the boundary is unknown.
    """
    if boundary not in ("fixed-free", "fixed-fixed"):
        raise UnknownSystemError(f"Unknown chain boundary {boundary}.")
    stiffness = 2 * np.eye(masses) - np.eye(masses, k=1) - np.eye(masses, k=-1)
    if boundary == "fixed-free":
        stiffness[-1, -1] = 1.0
    return stiffness


def oscillator_chain(
    masses: int = 5,
    kappa3: float = 0.5,
    mass_damping: float = 0.002,
    stiffness_damping: float = 0.005,
    boundary: str = "fixed-free",
) -> SystemSpec:
    """Chain of unit masses and springs with a cubic grounding spring on the first mass.

    The state is (q_1..q_n, q̇_1..q̇_n) and M q̈ + C q̇ + K q + κ₃ q_1³ e_1 = 0 with M = I and
    Rayleigh damping C = mass_damping M + stiffness_damping K.

    Args:
        masses: Number of masses.
        kappa3: Cubic spring coefficient on the first mass.
        mass_damping: Mass-proportional damping.
        stiffness_damping: Stiffness-proportional damping.
        boundary: "fixed-free" or "fixed-fixed".

    Returns:
        The system.
    """
    masses = int(masses)
    stiffness = _chain_stiffness(masses, boundary)
    damping = mass_damping * np.eye(masses) + stiffness_damping * stiffness
    state_matrix = np.block(
        [[np.zeros((masses, masses)), np.eye(masses)], [-stiffness, -damping]]
    )

    def field(_t: float, x: np.ndarray) -> np.ndarray:
        positions, velocities = x[:masses], x[masses:]
        accelerations = -stiffness @ positions - damping @ velocities
        accelerations[0] = accelerations[0] - kappa3 * positions[0] ** 3
        return np.concatenate([velocities, accelerations])

    return SystemSpec(
        name="oscillator-chain",
        kind=ODE,
        dim=2 * masses,
        function=field,
        parameters={
            "masses": float(masses),
            "kappa3": kappa3,
            "mass_damping": mass_damping,
            "stiffness_damping": stiffness_damping,
        },
        fixed_point=np.zeros(2 * masses),
        eigenvalues=linalg.eigvals(state_matrix),
        metadata={
            "stiffness": stiffness,
            "damping": damping,
            "state_matrix": state_matrix,
            "boundary": boundary,
        },
    )


def nonsmooth_1d(alpha: float = 1.0) -> SystemSpec:
    """Scalar flow ẋ = −x + x |x|^α, C¹ but not C² at the origin for α < 1.

    Args:
        alpha: Exponent of the nonlinearity.

    Returns:
        The system.
    """

    def field(_t: float, x: np.ndarray) -> np.ndarray:
        return -x + x * np.abs(x) ** alpha

    return SystemSpec(
        name="nonsmooth",
        kind=ODE,
        dim=1,
        function=field,
        parameters={"alpha": alpha},
        fixed_point=np.zeros(1),
        eigenvalues=np.array([-1.0 + 0j]),
    )


SYSTEMS: dict[str, typing.Callable[..., SystemSpec]] = {
    "stuart-landau": stuart_landau_radial,
    "3d-map": three_d_nonnormal_map,
    "duffing": duffing,
    "oscillator-chain": oscillator_chain,
    "nonsmooth": nonsmooth_1d,
}


def get_system(name: str, parameters: typing.Optional[dict[str, float]] = None) -> SystemSpec:
    """Build a registered system with parameter overrides.

    Args:
        name: Registry name.
        parameters: Keyword overrides.

    Returns:
        The system.

    Raises:
        UnknownSystemError: if the name or a parameter is unknown.
    """
    if name not in SYSTEMS:
        raise UnknownSystemError(
            f"Unknown system {name}, expected one of {', '.join(sorted(SYSTEMS))}."
        )
    try:
        return SYSTEMS[name](**(parameters or {}))
    except TypeError as exc:
        logger.error("Invalid parameters for system %s, %s", name, exc)
        raise UnknownSystemError(f"Invalid parameters for system {name}: {exc}") from exc


def numerical_jacobian(spec: SystemSpec, x: np.ndarray, step: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of the right-hand side.

    Args:
        spec: The system.
        x: Evaluation point.
        step: Perturbation size.

    Returns:
        The dim×dim Jacobian.
    """
    x = np.asarray(x, dtype=float)
    columns = []
    for index in range(spec.dim):
        delta = np.zeros(spec.dim)
        delta[index] = step
        forward = spec.function(0.0, x + delta)
        backward = spec.function(0.0, x - delta)
        columns.append((forward - backward) / (2 * step))
    return np.column_stack(columns)


def _rk4_step(field: VectorField, t: float, h: float, x: np.ndarray) -> np.ndarray:
    """One classical Runge-Kutta step.

    Args:
        field: Vector field.
        t: Time.
        h: Step.
        x: State.

    Returns:
        The state at t + h.
    """
    k1 = field(t, x)
    k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = field(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(  # pylint: disable=too-many-arguments
    spec: SystemSpec,
    x0: np.ndarray,
    t: float,
    dt_out: float,
    method: str = "RK45",
    t0: float = 0.0,
    substeps: int = 10,
    tol: float = INTEGRATION_TOL,
) -> Trajectory:
    """Integrate an ODE system and sample it every dt_out.

    Args:
        spec: ODE system.
        x0: Initial state.
        t: Time span.
        dt_out: Output sampling step.
        method: "RK4" (fixed step dt_out / substeps), "RK45" or "DOP853".
        t0: Initial time.
        substeps: RK4 steps per output sample.
        tol: Absolute and relative tolerance of the adaptive methods.

    Returns:
        The sampled trajectory, round(t / dt_out) + 1 samples.

    Raises:
        IntegrationError: if the system is a map, the method is unknown, the solver fails
            or the state leaves the finite range.
    """
    if spec.kind != ODE:
        raise IntegrationError(f"System {spec.name} is a map; iterate it instead.")
    count = int(round(t / dt_out))
    times = t0 + dt_out * np.arange(count + 1)
    x0 = np.asarray(x0, dtype=float).ravel()
    if method == RK4:
        states = np.empty((spec.dim, count + 1))
        states[:, 0] = x0
        h = dt_out / substeps
        for index in range(count):
            x = states[:, index]
            for sub in range(substeps):
                x = _rk4_step(spec.function, times[index] + sub * h, h, x)
            states[:, index + 1] = x
    elif method in ADAPTIVE_METHODS:
        solution = scipy_integrate.solve_ivp(
            spec.function,
            (times[0], times[-1]),
            x0,
            method=method,
            t_eval=times,
            rtol=tol,
            atol=tol,
        )
        if solution.status < 0:
            logger.error("Integration of %s failed, %s", spec.name, solution.message)
            raise IntegrationError(f"Integration of {spec.name} failed: {solution.message}")
        states = solution.y
    else:
        raise IntegrationError(f"Unknown integration method {method}.")
    if not np.all(np.isfinite(states)):
        raise IntegrationError(f"Trajectory of {spec.name} left the finite range.")
    return Trajectory(time=times, states=states)


def iterate(spec: SystemSpec, x0: np.ndarray, n: int) -> Trajectory:
    """Iterate a map n times.

    Args:
        spec: Map system.
        x0: Initial state.
        n: Number of iterations.

    Returns:
        The n + 1 iterates at integer times.

    Raises:
        IntegrationError: if the system is an ODE or an iterate is not finite.
    """
    if spec.kind != MAP:
        raise IntegrationError(f"System {spec.name} is an ODE; integrate it instead.")
    states = np.empty((spec.dim, n + 1))
    states[:, 0] = np.asarray(x0, dtype=float).ravel()
    for index in range(n):
        states[:, index + 1] = spec.function(float(index), states[:, index])
    if not np.all(np.isfinite(states)):
        raise IntegrationError(f"Iterates of {spec.name} left the finite range.")
    return Trajectory(time=np.arange(n + 1, dtype=float), states=states)


def sample_initial_conditions(
    spec: SystemSpec, count: int, radius: float, seed: int = 0
) -> np.ndarray:
    """Draw initial states uniformly from a ball around the fixed point.

    Args:
        spec: The system.
        count: Number of states.
        radius: Ball radius.
        seed: Random seed.

    Returns:
        dim×count states.
    """
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((spec.dim, count))
    directions /= np.linalg.norm(directions, axis=0)
    radii = radius * rng.uniform(size=count) ** (1 / spec.dim)
    center = spec.fixed_point if spec.fixed_point is not None else np.zeros(spec.dim)
    return center[:, None] + directions * radii


def modal_initial_condition(spec: SystemSpec, mode: int, amplitude: float) -> np.ndarray:
    """Chain state displaced along an undamped mode shape, at rest.

    Args:
        spec: Oscillator chain.
        mode: Mode index, 0 for the lowest frequency.
        amplitude: Largest displacement.

    Returns:
        The state.

    Raises:
        UnknownSystemError: if the system is not a chain.
    """
    if "stiffness" not in spec.metadata:
        raise UnknownSystemError(f"System {spec.name} has no mode shapes.")
    _, shapes = linalg.eigh(spec.metadata["stiffness"])
    shape = shapes[:, mode]
    positions = amplitude * shape / shape[np.argmax(np.abs(shape))]
    return np.concatenate([positions, np.zeros_like(positions)])


def to_observables(spec: SystemSpec, states: np.ndarray) -> np.ndarray:
    """Observe states.

    Args:
        spec: The system.
        states: Vector or dim×m states.

    Returns:
        The observables, identity when the system declares none.
    """
    if spec.observable is None:
        return np.asarray(states, dtype=float)
    return spec.observable(states)


def from_observables(spec: SystemSpec, phi: np.ndarray) -> np.ndarray:
    """Recover states from observables.

    Args:
        spec: The system.
        phi: Observables.

    Returns:
        The states.

    Raises:
        TestbedError: if the observable has no declared inverse.
    """
    if spec.observable is None:
        return np.asarray(phi, dtype=float)
    if spec.inverse_observable is None:
        raise TestbedError(f"Observables of {spec.name} have no declared inverse.")
    return spec.inverse_observable(phi)


def slow_mode(spec: SystemSpec) -> tuple[complex, np.ndarray]:
    """Slowest oscillatory eigenpair of a linearization.

    Args:
        spec: System whose metadata carries its state matrix.

    Returns:
        Eigenvalue with positive imaginary part and its eigenvector.
    """
    eigenvalues, vectors = linalg.eig(spec.metadata["state_matrix"])
    upper = np.flatnonzero(eigenvalues.imag > 0)
    index = upper[int(np.argmax(eigenvalues.real[upper]))]
    return complex(eigenvalues[index]), vectors[:, index]


def rank_degeneracy_observables(
    spec: typing.Optional[SystemSpec] = None,
) -> list[ObservableCheck]:
    """Check three 2D chain observables for nondegeneracy on the slow subspace.

    The observables are the projection onto the slow eigenvector, (q_1, q̇_1) and (q_1, q_2);
    only the last one collapses the slow subspace to a line.

    Args:
        spec: Oscillator chain; the default chain when absent.

    Returns:
        One check per observable.
    """
    spec = spec or oscillator_chain()
    masses = spec.dim // 2
    _, vector = slow_mode(spec)
    subspace = np.column_stack([vector.real, vector.imag])
    selections = {
        "slow-eigenvector": subspace.T,
        "q1-velocity1": np.eye(spec.dim)[[0, masses]],
        "q1-q2": np.eye(spec.dim)[[0, 1]],
    }
    checks = []
    for name, matrix in selections.items():
        restricted = matrix @ subspace
        singular_values = linalg.svdvals(restricted)
        rank = int(np.sum(singular_values > RANK_RTOL * singular_values[0]))
        if rank < 2:
            logger.warning(
                "Observable %s is degenerate on the slow subspace (rank %s)", name, rank
            )
        checks.append(
            ObservableCheck(
                name=name, matrix=matrix, restricted=restricted, rank=rank, degenerate=rank < 2
            )
        )
    return checks
