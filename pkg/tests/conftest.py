"""Shared fixtures and the opt-in switch for the slow full-scale check."""

from __future__ import annotations

import os

import numpy as np
import pytest

from bipex import build

# Hand-checkable 4x5 example used throughout: intervention unit 0 reaches
# outcome 0; unit 1 reaches outcomes 1 and 2; unit 2 reaches outcome 2;
# unit 3 reaches outcomes 0, 3 and 4.
TOY_EDGES = [(0, 0), (1, 1), (1, 2), (2, 2), (3, 0), (3, 3), (3, 4)]
TOY_M = 4
TOY_N = 5


@pytest.fixture
def toy_graph():
    return build(TOY_M, TOY_N, TOY_EDGES)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("BIPEX_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="full-scale check: set BIPEX_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
