from __future__ import annotations

import math
import os

import numpy as np
import pytest
from hypothesis import settings

from pbrkit.antidistinguish import build_half_overlap_measurement
from pbrkit.quantum import PureState, plus_state

settings.register_profile("fast", max_examples=10, deadline=None)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def half_pair() -> tuple[PureState, PureState]:
    return PureState.basis(0, 2), plus_state()


@pytest.fixture(scope="session")
def half_result(half_pair):
    return build_half_overlap_measurement(*half_pair)


def kron_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-by-element Kronecker product, written as a double loop."""
    out = np.zeros(a.size * b.size, dtype=complex)
    for i in range(a.size):
        for j in range(b.size):
            out[i * b.size + j] = a[i] * b[j]
    return out


SQRT_HALF = 1.0 / math.sqrt(2.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
