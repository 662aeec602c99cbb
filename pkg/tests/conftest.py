# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Fixtures for data-driven linearization tests."""

import pytest


def pytest_addoption(parser: pytest.Parser):
    """Parse additional pytest options.

    Args:
        parser: pytest command line parser.
    """
    # Skip forced response continuation and long reference integrations.
    parser.addoption("--skip-slow", action="store_true", default=False)


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]):
    """Skip tests marked slow when requested.

    Args:
        config: pytest configuration.
        items: Collected tests.
    """
    if not config.getoption("--skip-slow"):
        return
    skip = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
