"""Dense linear-algebra kernels.

Matrices are plain :class:`numpy.ndarray` objects; numpy supplies storage and
elementwise/matmul arithmetic only.  Factorizations, eigensolvers and the
matrix exponential are implemented here.  Most kernels accept stacks of
matrices (leading batch axes) so that a sweep over many symbol evaluations
costs one vectorized call instead of a Python loop.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from .errors import (
    NoConvergence,
    NonHermitian,
    NonSymmetric,
    NotPositiveDefinite,
    Singular,
)

EPS = np.finfo(float).eps
SYM_TOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60


def _fro(a, axis=(-2, -1)):
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=axis))


def is_symmetric(S, tol=SYM_TOL):
    S = np.asarray(S)
    return bool(np.all(_fro(S - np.swapaxes(S, -1, -2)) <= tol * _fro(S)))


def symmetrize(S):
    S = np.asarray(S)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def _check_square(A, name="matrix"):
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")


# --------------------------------------------------------------------------
# Cholesky


def chol_lower(S):
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == S``.

    Raises
    ------
    NonSymmetric
        If ``S`` deviates from symmetry by more than 1e-12 (relative).
    NotPositiveDefinite
        If a pivot falls below ``n * eps * max(diag(S))``.
    """
    S = np.asarray(S, dtype=float)
    _check_square(S, "S")
    if S.ndim != 2:
        raise ValueError("chol_lower expects a single matrix")
    if not is_symmetric(S):
        raise NonSymmetric("chol_lower: input is not symmetric")
    n = S.shape[0]
    L = np.zeros_like(S)
    floor = n * EPS * max(float(np.max(np.diag(S))), 0.0)
    for j in range(n):
        d = S[j, j] - L[j, :j] @ L[j, :j]
        if not d > floor:
            raise NotPositiveDefinite(
                f"chol_lower: pivot {j} is {d:.3e} (threshold {floor:.3e})"
            )
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def is_positive_definite(S):
    try:
        chol_lower(S)
    except (NotPositiveDefinite, NonSymmetric):
        return False
    return True


def tril_inverse(L):
    """Inverse of a nonsingular lower-triangular matrix by forward substitution."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    X = np.zeros_like(L)
    eye = np.eye(n)
    for i in range(n):
        X[i] = (eye[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


# --------------------------------------------------------------------------
# Symmetric / Hermitian eigenproblems


@lru_cache(maxsize=None)
def _schedule(n):
    """Round-robin tournament on ``k = n + n % 2`` players, laid out in halves.

    Returns the initial ordering and, per round, the permutation that carries
    the previous round's layout into this one.  In every layout position ``i``
    is paired with position ``i + k // 2``, so one round of disjoint rotations
    acts on two contiguous column blocks.
    """
    k = n + (n % 2)
    h = k // 2
    players = list(range(k))
    layouts = []
    for _ in range(k - 1):
        layouts.append(players[:h] + players[:h - 1:-1])
        players = [players[0], players[-1]] + players[1:-1]
    first = np.array(layouts[0], dtype=np.intp)
    moves = []
    for prev, cur in zip(layouts, layouts[1:] + layouts[:1]):
        where = {label: i for i, label in enumerate(prev)}
        moves.append(np.array([where[label] for label in cur], dtype=np.intp))
    return first, tuple(moves)


def _offdiag_norm(A):
    n = A.shape[-1]
    return _fro(np.where(np.eye(n, dtype=bool), 0.0, A))


def _rotation(W, h):
    """Jacobi cosines/sines annihilating ``W[i, h + i]`` for ``i < h``."""
    idx = np.arange(h)
    app = W[..., idx, idx]
    aqq = W[..., idx + h, idx + h]
    apq = W[..., idx, idx + h]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tau = (aqq - app) / (2.0 * apq)
        t = np.sign(tau) / (np.abs(tau) + np.hypot(tau, 1.0))
    t = np.where(tau == 0, 1.0, t)
    t = np.where(apq == 0, 0.0, t)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c[..., :, None], (t * c)[..., :, None]


def _rotate_rows(X, c, s, h):
    # rows i and h + i mix as [[c, -s], [s, c]]; halves are contiguous
    top = X[..., :h, :]
    bottom = X[..., h:, :]
    saved = top.copy()
    top *= c
    top -= s * bottom
    bottom *= c
    bottom += s * saved


def sym_eig(S, vectors=False):
    """Eigen-decomposition of a real symmetric matrix (or stack of them).

    Cyclic Jacobi rotations in round-robin order: each step applies the
    ``n // 2`` disjoint rotations of one tournament round together, so a
    sweep costs ``n - 1`` vectorized updates.  Sweeps continue until the
    off-diagonal Frobenius norm is at most 1e-14 times ``||S||_F``.

    Returns ascending eigenvalues, plus the orthonormal eigenvector matrix
    (columns) when ``vectors`` is true.
    """
    S = np.asarray(S, dtype=float)
    _check_square(S, "S")
    if not is_symmetric(S):
        raise NonSymmetric("sym_eig: input is not symmetric")
    n = S.shape[-1]
    batch = S.shape[:-2]
    k = n + (n % 2)
    h = k // 2
    pad = np.zeros(batch + (k, k))
    pad[..., :n, :n] = symmetrize(S)
    first, moves = _schedule(n)
    W = pad.take(first, axis=-2).take(first, axis=-1)
    # Ut holds the transpose of the accumulated orthogonal factor
    Ut = np.broadcast_to(np.eye(k)[first], batch + (k, k)).copy() if vectors else None
    label = first.copy()
    scale = _fro(S)
    target = JACOBI_TOL * scale
    prev = None
    for _ in range(JACOBI_MAX_SWEEPS):
        off = _offdiag_norm(W)
        if np.all(off <= target):
            break
        # rounding floor reached: another sweep cannot reduce it further
        if prev is not None and np.all((off <= 1e-13 * scale) & (off >= 0.5 * prev)):
            break
        prev = off
        for move in moves:
            if h:
                c, s = _rotation(W, h)
                # W <- J' W J as two row passes around a transpose; the
                # column permutation rides along with the transpose copy
                _rotate_rows(W, c, s, h)
                W = np.ascontiguousarray(np.swapaxes(W.take(move, axis=-2), -1, -2))
                _rotate_rows(W, c, s, h)
                idx = np.arange(h)
                back = move.argsort()
                W[..., idx, back[idx + h]] = 0.0
                W[..., idx + h, back[idx]] = 0.0
                if vectors:
                    _rotate_rows(Ut, c, s, h)
            W = W.take(move, axis=-2)
            if vectors:
                Ut = Ut.take(move, axis=-2)
            label = label[move]
        W = symmetrize(W)
    else:
        if np.any(_offdiag_norm(W) > 1e-12 * scale):
            raise NoConvergence("sym_eig: Jacobi sweeps did not converge")
    keep = np.flatnonzero(label < n)
    w = np.diagonal(W, axis1=-2, axis2=-1)[..., keep]
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    if not vectors:
        return w
    V = np.swapaxes(Ut, -1, -2)[..., :n, :][..., :, keep]
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    return w, V


def herm_eig(Hm):
    """Ascending real eigenvalues of a Hermitian matrix (or stack).

    ``X + iY`` is embedded as the real symmetric ``[[X, -Y], [Y, X]]`` whose
    spectrum is that of ``Hm`` with every value doubled.
    """
    Hm = np.asarray(Hm)
    _check_square(Hm, "Hm")
    if not np.all(_fro(Hm - np.conj(np.swapaxes(Hm, -1, -2))) <= SYM_TOL * _fro(Hm)):
        raise NonHermitian("herm_eig: input is not Hermitian")
    X = Hm.real
    Y = Hm.imag if np.iscomplexobj(Hm) else np.zeros_like(X)
    top = np.concatenate([X, -Y], axis=-1)
    bottom = np.concatenate([Y, X], axis=-1)
    big = symmetrize(np.concatenate([top, bottom], axis=-2))
    return sym_eig(big)[..., ::2]


def cond_spd(S):
    """Condition number ``lambda_max / lambda_min`` of a symmetric PD matrix."""
    w = sym_eig(S)
    return w[..., -1] / w[..., 0]


# --------------------------------------------------------------------------
# LU with partial pivoting


def lu_factor(A):
    """Partial-pivoting LU of a square matrix or stack.

    Returns ``(LU, perm)`` with unit-lower ``L`` and ``U`` packed in ``LU``
    and ``A[perm] == L @ U``.
    """
    LU = np.array(A, dtype=np.result_type(A, float), copy=True)
    _check_square(LU, "A")
    n = LU.shape[-1]
    batch = LU.shape[:-2]
    perm = np.broadcast_to(np.arange(n), batch + (n,)).copy()
    norm_inf = np.max(np.sum(np.abs(LU), axis=-1), axis=-1)
    floor = n * EPS * norm_inf
    for k in range(n):
        piv = k + np.argmax(np.abs(LU[..., k:, k]), axis=-1)
        idx = np.broadcast_to(np.arange(n), batch + (n,)).copy()
        idx[..., k] = piv
        np.put_along_axis(idx, piv[..., None], k, axis=-1)
        LU = np.take_along_axis(LU, idx[..., :, None], axis=-2)
        perm = np.take_along_axis(perm, idx, axis=-1)
        pivot = LU[..., k, k]
        if np.any(np.abs(pivot) < floor) or np.any(pivot == 0):
            raise Singular(f"lu: pivot {k} below threshold")
        LU[..., k + 1:, k] /= pivot[..., None]
        LU[..., k + 1:, k + 1:] -= LU[..., k + 1:, k, None] * LU[..., k, None, k + 1:]
    return LU, perm


def lu_solve(A, B):
    """Solve ``A X = B`` by LU with partial pivoting.

    ``B`` may be a vector or a matrix; batch axes broadcast with ``A``.
    Raises :class:`Singular` when a pivot magnitude falls below
    ``n * eps * ||A||_inf``.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    vec = B.ndim == 1
    if vec:
        B = B[..., None]
    if B.shape[-2] != A.shape[-1]:
        raise ValueError(f"lu_solve: shapes {A.shape} and {B.shape} do not conform")
    LU, perm = lu_factor(A)
    n = LU.shape[-1]
    X = np.take_along_axis(
        np.broadcast_to(B, LU.shape[:-2] + B.shape[-2:]).astype(np.result_type(LU, B)),
        perm[..., :, None],
        axis=-2,
    ).copy()
    for i in range(n):
        X[..., i, :] -= np.einsum("...j,...jk->...k", LU[..., i, :i], X[..., :i, :])
    for i in reversed(range(n)):
        X[..., i, :] -= np.einsum("...j,...jk->...k", LU[..., i, i + 1:], X[..., i + 1:, :])
        X[..., i, :] /= LU[..., i, i, None]
    return X[..., 0] if vec else X


def clu_solve(A, B):
    """Complex analogue of :func:`lu_solve` (inputs promoted to complex)."""
    return lu_solve(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def det(A):
    LU, perm = lu_factor(A)
    n = LU.shape[-1]
    # parity of the permutation via cycle counting
    sign = 1.0
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return sign * np.prod(np.diagonal(LU))


def inv(A):
    A = np.asarray(A)
    return lu_solve(A, np.broadcast_to(np.eye(A.shape[-1]), A.shape))


# --------------------------------------------------------------------------
# Matrix exponential and Kronecker product

_PADE_DEGREE = 6
_PADE_COEFFS = [
    factorial(2 * _PADE_DEGREE - k) * factorial(_PADE_DEGREE)
    / (factorial(2 * _PADE_DEGREE) * factorial(k) * factorial(_PADE_DEGREE - k))
    for k in range(_PADE_DEGREE + 1)
]


def mat_exp(A):
    """Matrix exponential by scaling and squaring with a (6, 6) Pade approximant."""
    A = np.asarray(A, dtype=float)
    _check_square(A, "A")
    n = A.shape[0]
    norm = float(np.max(np.sum(np.abs(A), axis=1))) if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = A / (2.0 ** s)
    num = np.zeros_like(X)
    den = np.zeros_like(X)
    power = np.eye(n)
    for k, ck in enumerate(_PADE_COEFFS):
        if k:
            power = power @ X
        num += ck * power
        den += ck * (-1) ** k * power
    E = lu_solve(den, num)
    for _ in range(s):
        E = E @ E
    return E


def kron(A, B):
    """Kronecker product with the standard block layout."""
    A = np.atleast_2d(np.asarray(A))
    B = np.atleast_2d(np.asarray(B))
    (ra, ca), (rb, cb) = A.shape, B.shape
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(ra * rb, ca * cb)


def block_diag(*blocks):
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
