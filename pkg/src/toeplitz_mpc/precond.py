"""Horizon-independent block-diagonal preconditioner.

The preconditioner block is the Cholesky factor of ``M = B' P B + R``, the
diagonal block of the infinite block Toeplitz Hessian.  ``P`` is the
infinite-horizon cost-to-go of the predicted system: the DARE solution when
the prediction is prestabilized by the LQR gain, and the open-loop Lyapunov
solution when a stable plant is predicted with ``K = 0``.  Neither depends
on the horizon.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import matkit
from .errors import DimensionMismatch, NotStable, WrongDomain
from .riccati import solve_dare, solve_dlyap
from .symbol import MatrixSymbol, SymbolKind


@dataclass(frozen=True, eq=False)
class BlockPreconditioner:
    M: np.ndarray
    L: np.ndarray
    L_inv: np.ndarray
    P: np.ndarray

    @property
    def m(self):
        return self.M.shape[0]

    def block_inverse(self, N):
        """``L_N^{-1} = I_N (x) L^{-1}``."""
        return matkit.kron(np.eye(N), self.L_inv)


def from_block(M, P=None):
    """Preconditioner from an explicit SPD block ``M``."""
    M = matkit.symmetrize(np.asarray(M, dtype=float))
    L = matkit.chol_lower(M)
    return BlockPreconditioner(M, L, matkit.tril_inverse(L), P)


def identity_preconditioner(m):
    return BlockPreconditioner(np.eye(m), np.eye(m), np.eye(m), None)


def build_preconditioner(model, spec, prestabilize=True):
    """``M = B' P B + R`` and its lower Cholesky factor.

    Raises :class:`NotStable` when ``prestabilize`` is false and the plant is
    not Schur-stable: the open-loop Hessian then has no symbol and no
    horizon-independent diagonal block.
    """
    if not model.is_discrete:
        raise WrongDomain("build_preconditioner needs a discrete model")
    spec.check_against(model)
    if prestabilize:
        P = solve_dare(model.A, model.B, spec.Q, spec.R).P
    else:
        try:
            P = solve_dlyap(model.A, spec.Q)
        except NotStable as exc:
            raise NotStable("preconditioner not computable for an unstable open-loop plant") from exc
    return from_block(model.B.T @ P @ model.B + spec.R, P)


def apply_to_qp(qp, pc):
    """Symmetric preconditioning ``L_N^{-1} H L_N^{-T}`` with ``v = L_N^{-T} w``.

    The feasible set maps exactly: ``G v <= F x + g`` becomes
    ``(G L_N^{-T}) w <= F x + g``.
    """
    if pc.m != qp.m:
        raise DimensionMismatch(f"preconditioner block is {pc.m}x{pc.m}, QP inputs m={qp.m}")
    Linv = pc.block_inverse(qp.N)
    H = matkit.symmetrize(Linv @ qp.H @ Linv.T)
    recover = Linv.T if qp.recover is None else qp.recover @ Linv.T
    return replace(qp, H=H, Phi=Linv @ qp.Phi, G=qp.G @ Linv.T, recover=recover)


def preconditioned_symbol(sym, pc):
    """Symbol ``L^{-1} P_H L^{-T}`` of the preconditioned Hessian."""
    if sym.kind is not SymbolKind.HESSIAN:
        raise ValueError("only Hessian symbols can be preconditioned")
    if pc.m != sym.B.shape[1]:
        raise DimensionMismatch("preconditioner block does not match the symbol size")
    return MatrixSymbol(SymbolKind.PRECONDITIONED_HESSIAN, sym.A_c, sym.B, sym.Q_c, sym.R,
                        transform=pc.L_inv)
