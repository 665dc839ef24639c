"""Condensed QP construction for the plain and prestabilized CLQR problem.

The decision variable stacks ``v = (v_0, ..., v_{N-1})`` with
``u_k = -K x_k + v_k`` (``K = 0`` without prestabilization).  States
``x_1..x_N`` are eliminated through the prediction matrices, giving

    min  1/2 v' H v + x' Phi' v    s.t.  G v <= F x + g
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import matkit
from .errors import WrongDomain
from .model import StabilityCertificate, Terminal, check_schur_stability
from .riccati import resolve_terminal, solve_dare, solve_dlyap


@dataclass(frozen=True, eq=False)
class PredictionPair:
    """``Gamma`` maps stacked inputs to ``x_1..x_N``; ``Lambda`` maps ``x_0``."""

    Gamma: np.ndarray
    Lambda: np.ndarray
    n: int
    m: int
    N: int

    def gamma_block(self, i, j):
        n, m = self.n, self.m
        return self.Gamma[i * n:(i + 1) * n, j * m:(j + 1) * m]

    def lambda_block(self, k):
        return self.Lambda[k * self.n:(k + 1) * self.n]


@dataclass(frozen=True, eq=False)
class CondensedQp:
    H: np.ndarray
    Phi: np.ndarray
    G: np.ndarray
    F: np.ndarray
    g: np.ndarray
    K: np.ndarray
    N: int
    n: int
    m: int
    l: int
    # constituents kept for symbol construction and diagnostics
    A_c: np.ndarray
    B: np.ndarray
    Q_c: np.ndarray
    R: np.ndarray
    P: np.ndarray
    certificate: StabilityCertificate
    prestabilized: bool = False
    # v = recover @ w when the QP has been through a change of variables
    recover: Optional[np.ndarray] = None

    def gradient(self, v, x_hat):
        return self.H @ v + self.Phi @ x_hat

    def objective(self, v, x_hat):
        return 0.5 * v @ self.H @ v + x_hat @ self.Phi.T @ v

    def rhs(self, x_hat):
        """Constraint right-hand side ``F x + g``."""
        return self.F @ x_hat + self.g

    def to_original(self, w):
        """Map a solution of this QP back to the prestabilized input sequence."""
        return w if self.recover is None else self.recover @ w

    def first_input(self, w, x_hat):
        """Applied input ``u_0 = -K x + v_0``."""
        v = self.to_original(w)
        return -self.K @ x_hat + v[:self.m]

    def hessian_block(self, i, j):
        m = self.m
        return self.H[i * m:(i + 1) * m, j * m:(j + 1) * m]

    def without_constraints(self):
        return replace(self, G=np.zeros((0, self.N * self.m)), F=np.zeros((0, self.n)),
                       g=np.zeros(0), l=0)


def build_prediction(A_c, B, N):
    """Block lower-triangular ``Gamma`` (block (i, j) = ``A_c^{i-j} B``) and ``Lambda``."""
    A_c = np.asarray(A_c, dtype=float)
    B = np.asarray(B, dtype=float)
    if N < 1:
        raise ValueError("horizon must be at least 1")
    n, m = B.shape
    Gamma = np.zeros((N * n, N * m))
    Lambda = np.zeros((N * n, n))
    blk = B
    power = A_c
    for d in range(N):
        Lambda[d * n:(d + 1) * n] = power
        for j in range(N - d):
            i = j + d
            Gamma[i * n:(i + 1) * n, j * m:(j + 1) * m] = blk
        blk = A_c @ blk
        power = A_c @ power
    return PredictionPair(Gamma, Lambda, n, m, N)


def _stacked_state_weight(Q_c, P, N):
    return matkit.block_diag(*([Q_c] * (N - 1) + [P]))


def build_hessian(pred, Q_c, P, R, N):
    """``Gamma' blkdiag(I_{N-1} (x) Q_c, P) Gamma + I_N (x) R``."""
    Qbar = _stacked_state_weight(Q_c, P, N)
    H = pred.Gamma.T @ Qbar @ pred.Gamma + matkit.kron(np.eye(N), R)
    return matkit.symmetrize(H)


def build_linear_map(pred, Q_c, P, N):
    """``Phi = Gamma' Qbar Lambda`` so that the gradient is ``H v + Phi x``."""
    return pred.Gamma.T @ _stacked_state_weight(Q_c, P, N) @ pred.Lambda


def build_constraints(model, spec, K, pred):
    """Stage constraints ``Eu u_k + Ex x_k <= c`` for ``k = 0..N-1`` in terms of ``v``.

    With ``Ebar = Ex - Eu K`` stage ``k`` reads ``Ebar x_k + Eu v_k <= c``.
    """
    N, n, m = pred.N, pred.n, pred.m
    l = spec.l
    Ebar = spec.Ex - spec.Eu @ K
    G = np.zeros((N * l, N * m))
    F = np.zeros((N * l, n))
    for k in range(N):
        rows = slice(k * l, (k + 1) * l)
        G[rows, k * m:(k + 1) * m] = spec.Eu
        for j in range(k):
            # x_k depends on v_j through block (k-1, j) of Gamma
            G[rows, j * m:(j + 1) * m] = Ebar @ pred.gamma_block(k - 1, j)
        F[rows] = -Ebar if k == 0 else -Ebar @ pred.lambda_block(k - 1)
    g = np.tile(spec.c, N)
    return G, F, g


def condense(model, spec, prestabilize=False):
    """Assemble the condensed QP.

    With ``prestabilize`` the prediction uses ``A_c = A - BK`` and stage weight
    ``Q_c = Q + K'RK`` where ``K`` comes from :func:`resolve_terminal`;
    otherwise ``A_c = A``, ``Q_c = Q`` and ``K = 0``.  Under the ``q`` terminal
    policy the terminal block equals the stage weight ``Q_c``.

    Unstable ``A_c`` is not an error here; the stability certificate rides
    along on the result for the symbol module to check.
    """
    if not model.is_discrete:
        raise WrongDomain("condense needs a discrete model")
    spec.check_against(model)
    N = spec.N
    P, K = resolve_terminal(spec, model)
    if prestabilize and spec.terminal is Terminal.DLYAP:
        K = solve_dare(model.A, model.B, spec.Q, spec.R).K
    if not prestabilize:
        K = np.zeros((model.m, model.n))
    A_c = model.A - model.B @ K
    Q_c = matkit.symmetrize(spec.Q + K.T @ spec.R @ K)
    if spec.terminal is Terminal.SAME_AS_Q:
        P = Q_c
    elif spec.terminal is Terminal.DLYAP and prestabilize:
        # cost-to-go of the prestabilized loop
        P = solve_dlyap(A_c, Q_c)
    pred = build_prediction(A_c, model.B, N)
    H = build_hessian(pred, Q_c, P, spec.R, N)
    Phi = build_linear_map(pred, Q_c, P, N)
    G, F, g = build_constraints(model, spec, K, pred)
    return CondensedQp(
        H=H, Phi=Phi, G=G, F=F, g=g, K=K, N=N, n=model.n, m=model.m, l=spec.l,
        A_c=A_c, B=model.B, Q_c=Q_c, R=spec.R, P=P,
        certificate=check_schur_stability(A_c),
        prestabilized=bool(prestabilize),
    )
