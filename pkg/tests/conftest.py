import sys
import numpy as np
import pytest

from toeplitz_mpc import ClqrSpec, LtiModel, Terminal, input_box
from toeplitz_mpc.cli import ResolvedSystem, resolve_system

from oracles import random_stable_system


@pytest.fixture(scope="session")
def schur():
    return resolve_system("schur-stable")


@pytest.fixture(scope="session")
def pendulum():
    return resolve_system("pendulum")


def make_random_system(seed, n=None, m=None, box=1.0, terminal=Terminal.DARE, N=10):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5)) if n is None else n
    m = int(rng.integers(1, 3)) if m is None else m
    A, B, Q, R = random_stable_system(rng, n, m)
    Eu, c = input_box(np.full(m, box))
    spec = ClqrSpec(Q, R, Eu, np.zeros((2 * m, n)), c, N=N, terminal=terminal)
    return ResolvedSystem(f"random-{seed}", LtiModel(A, B), spec)


@pytest.fixture
def random_system():
    return make_random_system


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
