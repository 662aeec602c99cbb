# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Helper functions used in the unit tests."""

import math
import typing

import numpy as np

import testbed
from reduce import TrajectorySet
from testbed import SystemSpec


def simulate_observables(
    spec: SystemSpec, initial_states: typing.Iterable[np.ndarray], t: float, dt: float
) -> TrajectorySet:
    """Simulate a testbed system and keep its observables.

    Args:
        spec: The system.
        initial_states: One initial state per trajectory.
        t: Time span, or number of iterations for maps.
        dt: Sampling step, ignored for maps.

    Returns:
        The observed trajectories.
    """
    blocks = []
    for x0 in initial_states:
        if spec.kind == testbed.MAP:
            trajectory = testbed.iterate(spec, x0, int(t))
        else:
            trajectory = testbed.integrate(spec, x0, t, dt)
        blocks.append(testbed.to_observables(spec, trajectory.states))
    return TrajectorySet.from_arrays(blocks, 1.0 if spec.kind == testbed.MAP else dt)


def circle_states(spec: SystemSpec, radius: float, count: int) -> list[np.ndarray]:
    """States whose observables lie evenly on a circle in the first two coordinates.

    Args:
        spec: A system with an invertible observable.
        radius: Circle radius in observable space.
        count: Number of states.

    Returns:
        The states.
    """
    states = []
    for index in range(count):
        angle = 2 * math.pi * index / count
        phi = np.zeros(spec.dim)
        phi[:2] = radius * np.array([math.cos(angle), math.sin(angle)])
        states.append(testbed.from_observables(spec, phi))
    return states


def nearest_distance(reference: np.ndarray, values: np.ndarray) -> float:
    """Largest distance from a reference value to its closest candidate.

    Args:
        reference: Expected complex values.
        values: Computed complex values.

    Returns:
        max over reference of min over values of the distance.
    """
    return float(max(np.min(np.abs(values - value)) for value in reference))
