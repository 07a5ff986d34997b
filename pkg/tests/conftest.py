"""Shared test helpers: random-but-valid model states and designs."""

from __future__ import annotations

import numpy as np
import pytest

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from netreg import (
    Dataset,
    DesignMatrix,
    Hyperparameters,
    LatentState,
    build_design,
    gen_predictors,
)
from netreg.data import edge_count


def random_design(rng: np.random.Generator, V: int, n: int) -> DesignMatrix:
    nets = gen_predictors(V, n, rng)
    y = rng.standard_normal(n)
    return build_design(Dataset(nets, y))


def random_state(rng: np.random.Generator, V: int, R: int) -> LatentState:
    """A structurally valid state with comfortably interior values."""
    q = edge_count(V)
    A = rng.standard_normal((R, R))
    M = A @ A.T + np.eye(R)
    xi = (rng.random(V) < 0.7).astype(np.int8)
    U = rng.standard_normal((V, R))
    U[xi == 0] = 0.0
    return LatentState(
        mu=float(rng.normal()),
        tau2=float(rng.uniform(0.3, 2.0)),
        gamma=rng.standard_normal(q),
        U=U,
        xi=xi,
        lam=(rng.random(R) < 0.5).astype(np.int8),
        pi=rng.uniform(0.05, 0.95, R),
        delta=float(rng.uniform(0.1, 0.9)),
        theta2=float(rng.uniform(0.5, 3.0)),
        s=rng.uniform(0.2, 3.0, q),
        M=M,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_problem(rng):
    V, R, n = 5, 2, 12
    design = random_design(rng, V, n)
    hyper = Hyperparameters(R=R)
    state = random_state(rng, V, R)
    return design, hyper, state
