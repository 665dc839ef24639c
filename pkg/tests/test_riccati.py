import numpy as np
import pytest

from toeplitz_mpc import (
    ClqrSpec,
    LtiModel,
    Terminal,
    get_system,
    input_box,
    lqr_gain,
    resolve_terminal,
    solve_dare,
    solve_dlyap,
)
from toeplitz_mpc.errors import NoConvergence, NotStable, WrongDomain
from toeplitz_mpc.riccati import dare_defect

from oracles import dlyap_series, random_stable_system


def test_scalar_dare_closed_form():
    # p = p + 1 - p^2 / (p + 1)  =>  p^2 - 2p - 1 ... with a = 2, b = q = r = 1:
    # p = 4p + 1 - 4p^2 / (p + 1)  =>  p^2 - 4p - 1 = 0  =>  p = 2 + sqrt(5)
    sol = solve_dare(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]))
    assert sol.P[0, 0] == pytest.approx(2 + np.sqrt(5), abs=1e-10)
    assert sol.K[0, 0] == pytest.approx(2 * (2 + np.sqrt(5)) / (3 + np.sqrt(5)), abs=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_dare_defect_and_closed_loop(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4))  # generally unstable
    B = rng.standard_normal((4, 2))
    Q = np.eye(4)
    R = np.eye(2)
    sol = solve_dare(A, B, Q, R)
    assert sol.residual <= 1e-10 * np.linalg.norm(sol.P)
    assert dare_defect(A, B, Q, R, sol.P) <= 1e-10 * np.linalg.norm(sol.P)
    assert max(abs(np.linalg.eigvals(A - B @ sol.K))) < 1
    assert np.allclose(sol.K, lqr_gain(A, B, R, sol.P))


def test_dare_is_the_infinite_horizon_cost():
    # the optimal cost from x0 equals x0' P x0; checked by simulating the LQR loop
    rng = np.random.default_rng(11)
    A, B, Q, R = random_stable_system(rng, 3, 2)
    sol = solve_dare(A, B, Q, R)
    x = rng.standard_normal(3)
    x0 = x.copy()
    J = 0.0
    for _ in range(2000):
        u = -sol.K @ x
        J += x @ Q @ x + u @ R @ u
        x = A @ x + B @ u
    assert J == pytest.approx(x0 @ sol.P @ x0, rel=1e-10)


def test_dare_unstabilizable():
    A = np.diag([2.0, 0.5])
    B = np.array([[0.0], [1.0]])  # unstable mode not reachable
    with pytest.raises(NoConvergence):
        solve_dare(A, B, np.eye(2), np.eye(1))


def test_pendulum_dare():
    e = get_system("pendulum")
    d = e.model.discrete()
    sol = solve_dare(d.A, d.B, e.spec.Q, e.spec.R)
    assert sol.residual <= 1e-10 * np.linalg.norm(sol.P)


def test_dlyap_matches_series():
    rng = np.random.default_rng(3)
    A, _, Q, _ = random_stable_system(rng, 4, 1, rho=0.8)
    X = solve_dlyap(A, Q)
    assert np.allclose(X, dlyap_series(A, Q), rtol=1e-11, atol=0)
    with pytest.raises(NotStable):
        solve_dlyap(np.diag([1.1, 0.2]), np.eye(2))


def test_resolve_terminal_policies():
    e = get_system("schur-stable")
    m = e.model
    P, K = resolve_terminal(e.spec.with_terminal(Terminal.DLYAP), m)
    assert np.array_equal(K, np.zeros((2, 4)))
    assert np.allclose(P, solve_dlyap(m.A, e.spec.Q))
    sol = solve_dare(m.A, m.B, e.spec.Q, e.spec.R)
    P, K = resolve_terminal(e.spec.with_terminal(Terminal.DARE), m)
    assert np.allclose(P, sol.P) and np.allclose(K, sol.K)
    P, K = resolve_terminal(e.spec.with_terminal(Terminal.SAME_AS_Q), m)
    assert np.array_equal(P, e.spec.Q) and np.allclose(K, sol.K)
    P, _ = resolve_terminal(e.spec.with_terminal(Terminal.EXPLICIT, 5 * np.eye(4)), m)
    assert np.array_equal(P, 5 * np.eye(4))
    with pytest.raises(WrongDomain):
        pend = get_system("pendulum")
        resolve_terminal(pend.spec, pend.model)
