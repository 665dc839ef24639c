"""Discrete Riccati and Lyapunov solvers, LQR gain, terminal-cost resolution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit
from .errors import NoConvergence, NotStable, WrongDomain
from .model import Terminal, _lyapunov_kron, check_schur_stability

DARE_STEP_TOL = 1e-13
DARE_MAX_ITERS = 10_000
DARE_DEFECT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DareSolution:
    P: np.ndarray
    K: np.ndarray
    residual: float
    iterations: int


def lqr_gain(A, B, R, P):
    """``K = (B' P B + R)^{-1} B' P A``."""
    return matkit.lu_solve(matkit.symmetrize(B.T @ P @ B + R), B.T @ P @ A)


def dare_defect(A, B, Q, R, P):
    K = lqr_gain(A, B, R, P)
    return np.linalg.norm(A.T @ P @ A + Q - A.T @ P @ B @ K - P)


def solve_dare(A, B, Q, R):
    """Solve ``P = A'PA + Q - A'PB (B'PB + R)^{-1} B'PA`` by fixed-point iteration.

    Starts from ``P = Q`` and iterates until successive iterates differ by at
    most 1e-13 relative (Frobenius), re-symmetrizing every step.  The result
    is accepted only if the DARE defect is at most 1e-10 ``||P||_F`` and the
    closed loop ``A - BK`` is certified Schur-stable.

    Raises
    ------
    NoConvergence
        Iteration cap hit, iterates blew up, or the fixed point fails the
        defect / stability checks.  Typically a non-stabilizable pair.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    P = matkit.symmetrize(Q)
    for it in range(1, DARE_MAX_ITERS + 1):
        K = lqr_gain(A, B, R, P)
        P_next = matkit.symmetrize(A.T @ P @ A + Q - A.T @ P @ B @ K)
        if not np.all(np.isfinite(P_next)):
            raise NoConvergence("solve_dare: iterates diverged")
        step = np.linalg.norm(P_next - P)
        P = P_next
        if step <= DARE_STEP_TOL * np.linalg.norm(P):
            break
    else:
        raise NoConvergence(f"solve_dare: no convergence in {DARE_MAX_ITERS} iterations")
    K = lqr_gain(A, B, R, P)
    residual = dare_defect(A, B, Q, R, P)
    if residual > DARE_DEFECT_TOL * np.linalg.norm(P):
        raise NoConvergence(f"solve_dare: defect {residual:.3e} exceeds tolerance")
    if not check_schur_stability(A - B @ K).stable:
        raise NoConvergence("solve_dare: closed loop A - BK is not Schur-stable")
    return DareSolution(P, K, float(residual), it)


def solve_dlyap(A, Q):
    """Solve ``A' X A + Q = X`` for Schur-stable ``A`` (Kronecker linear solve)."""
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    cert = check_schur_stability(A)
    if not cert.stable:
        raise NotStable(f"solve_dlyap: A is {cert.verdict.value}")
    X = _lyapunov_kron(A, Q)
    defect = np.linalg.norm(A.T @ X @ A + Q - X)
    if defect > 1e-10 * np.linalg.norm(X):
        raise NoConvergence(f"solve_dlyap: defect {defect:.3e} exceeds tolerance")
    return X


def resolve_terminal(spec, model):
    """Terminal weight ``P`` and prestabilizing gain ``K`` for a CLQR problem.

    ``K`` is the infinite-horizon LQR gain except under the Lyapunov policy,
    which models a stable plant left in open loop (``K = 0``).
    """
    if not model.is_discrete:
        raise WrongDomain("resolve_terminal needs a discrete model")
    A, B = model.A, model.B
    if spec.terminal is Terminal.DLYAP:
        return solve_dlyap(A, spec.Q), np.zeros((model.m, model.n))
    sol = solve_dare(A, B, spec.Q, spec.R)
    if spec.terminal is Terminal.DARE:
        return sol.P, sol.K
    if spec.terminal is Terminal.SAME_AS_Q:
        return spec.Q, sol.K
    return spec.P, sol.K
