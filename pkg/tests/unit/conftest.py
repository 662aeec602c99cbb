# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Fixtures for the data-driven linearization unit tests."""

import numpy as np
import pytest

import ddl
import linfit
import reduce
import testbed
from ddl import DdlModel
from reduce import TrajectorySet
from testbed import SystemSpec

from .helpers import circle_states, simulate_observables

STUART_LANDAU_DT = 0.05
STUART_LANDAU_OFFSETS = (-0.1, -0.05, 0.05, 0.1)
DUFFING_DT = 0.1
DUFFING_RADIUS = 0.25


@pytest.fixture(scope="session", name="stuart_landau")
def stuart_landau_fixture() -> SystemSpec:
    """Radial Stuart-Landau system."""
    return testbed.stuart_landau_radial()


@pytest.fixture(scope="session", name="stuart_landau_trajectories")
def stuart_landau_trajectories_fixture(stuart_landau: SystemSpec) -> TrajectorySet:
    """Four decaying trajectories starting within 0.1 of the limit cycle."""
    initial = [np.array([1.0 + offset]) for offset in STUART_LANDAU_OFFSETS]
    return simulate_observables(stuart_landau, initial, 5.0, STUART_LANDAU_DT)


@pytest.fixture(scope="session", name="stuart_landau_pairs")
def stuart_landau_pairs_fixture(stuart_landau_trajectories: TrajectorySet):
    """Snapshot pairs of the Stuart-Landau trajectories."""
    return reduce.snapshot_pairs(stuart_landau_trajectories)


@pytest.fixture(scope="session", name="stuart_landau_model")
def stuart_landau_model_fixture(stuart_landau_pairs) -> DdlModel:
    """Order-4 DDL model of the Stuart-Landau data."""
    model, _ = ddl.fit(stuart_landau_pairs, 4)
    return model


@pytest.fixture(scope="session", name="duffing")
def duffing_fixture() -> SystemSpec:
    """Unforced damped Duffing oscillator."""
    return testbed.duffing()


@pytest.fixture(scope="session", name="duffing_trajectories")
def duffing_trajectories_fixture(duffing: SystemSpec) -> TrajectorySet:
    """Three decaying Duffing trajectories starting on a circle of observables."""
    return simulate_observables(
        duffing, circle_states(duffing, DUFFING_RADIUS, 3), 100.0, DUFFING_DT
    )


@pytest.fixture(scope="session", name="duffing_model")
def duffing_model_fixture(duffing_trajectories: TrajectorySet) -> DdlModel:
    """Order-5 DDL model of the Duffing data."""
    model, _ = ddl.fit(reduce.snapshot_pairs(duffing_trajectories), 5)
    return model


@pytest.fixture(scope="session", name="duffing_dmd")
def duffing_dmd_fixture(duffing_trajectories: TrajectorySet) -> linfit.LinearModel:
    """DMD model of the Duffing data."""
    return linfit.fit_dmd(reduce.snapshot_pairs(duffing_trajectories))


@pytest.fixture(scope="session", name="duffing_analytic_model")
def duffing_analytic_model_fixture() -> DdlModel:
    """Order-9 analytic linearization of the exact Duffing polynomial field."""
    dynamics = testbed.duffing_polynomial()
    return ddl.analytic_model(
        dynamics.B, dynamics.q, 9, DUFFING_DT, q_basis=dynamics.basis
    )
