"""Matrix symbols of the prediction matrix and condensed Hessian.

For a Schur-stable ``A_c`` the prediction matrix is a truncation of the block
Toeplitz operator generated by ``z (zI - A_c)^{-1} B`` and the Hessian of the
one generated by ``P_Gamma(z)^H Q_c P_Gamma(z) + R``.  Extreme eigenvalues of
the Hessian symbol over the unit circle bound the spectrum of every finite
Hessian and are approached as the horizon grows.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matkit
from .errors import (
    ContainmentViolated,
    Singular,
    SingularResolvent,
    SymbolUnavailable,
)
from .model import check_schur_stability

DEFAULT_GRID = 4096
REFINE_TOL = 1e-10
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class SymbolKind(enum.Enum):
    PREDICTION = "prediction"
    HESSIAN = "hessian"
    PRECONDITIONED_HESSIAN = "preconditioned-hessian"


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    kind: SymbolKind
    A_c: np.ndarray
    B: np.ndarray
    Q_c: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    # L^{-1} applied as L^{-1} P_H L^{-T} for the preconditioned kind
    transform: Optional[np.ndarray] = None

    def __post_init__(self):
        cert = check_schur_stability(self.A_c)
        if not cert.stable:
            raise SymbolUnavailable(
                f"A_c is {cert.verdict.value}; the Toeplitz symbol does not exist"
            )
        if self.kind is not SymbolKind.PREDICTION and (self.Q_c is None or self.R is None):
            raise ValueError("Hessian symbols need Q_c and R")
        if self.kind is SymbolKind.PRECONDITIONED_HESSIAN and self.transform is None:
            raise ValueError("preconditioned symbol needs a transform")

    @property
    def size(self):
        return self.B.shape[1] if self.kind is not SymbolKind.PREDICTION else None


def prediction_symbol(A_c, B):
    return MatrixSymbol(SymbolKind.PREDICTION, np.asarray(A_c, float), np.asarray(B, float))


def hessian_symbol(A_c, B, Q_c, R):
    return MatrixSymbol(SymbolKind.HESSIAN, np.asarray(A_c, float), np.asarray(B, float),
                        np.asarray(Q_c, float), np.asarray(R, float))


def qp_symbol(qp):
    """Hessian symbol of a condensed QP (prestabilized or not)."""
    return hessian_symbol(qp.A_c, qp.B, qp.Q_c, qp.R)


def eval_symbol(sym, theta):
    """Symbol value at ``z = exp(i theta)``; ``theta`` may be an array."""
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    n = sym.A_c.shape[0]
    shift = z[..., None, None] * np.eye(n) - sym.A_c
    try:
        resolvent_B = matkit.clu_solve(shift, np.broadcast_to(sym.B, theta.shape + sym.B.shape))
    except Singular as exc:
        raise SingularResolvent("zI - A_c is singular on the unit circle") from exc
    pg = z[..., None, None] * resolvent_B
    if sym.kind is SymbolKind.PREDICTION:
        return pg
    ph = np.conj(np.swapaxes(pg, -1, -2)) @ sym.Q_c @ pg + sym.R
    if sym.kind is SymbolKind.PRECONDITIONED_HESSIAN:
        T = sym.transform
        ph = T @ ph @ T.T
    return 0.5 * (ph + np.conj(np.swapaxes(ph, -1, -2)))


def symbol_eigenvalues(sym, theta):
    """Ascending eigenvalues of a Hessian-kind symbol at each ``theta``."""
    if sym.kind is SymbolKind.PREDICTION:
        raise ValueError("the prediction symbol is not Hermitian")
    return matkit.herm_eig(eval_symbol(sym, theta))


@dataclass(frozen=True)
class SpectralBounds:
    lambda_min: float
    lambda_max: float
    grid_points: int
    argmin_theta: float
    argmax_theta: float
    kappa: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.lambda_min <= self.lambda_max:
            raise ValueError(f"invalid bounds [{self.lambda_min}, {self.lambda_max}]")
        object.__setattr__(self, "kappa", self.lambda_max / self.lambda_min)


def _golden_refine(f, lo, hi, x0, f0, tol, max_iter=200):
    """Minimize ``f`` on ``[lo, hi]`` by golden-section search.

    Stops once the best value moves by less than ``tol`` (relative) across a
    full bracket contraction.  Returns the best ``(x, f(x))`` seen, never
    worse than ``(x0, f0)``.
    """
    best_x, best_f = x0, f0
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    last = best_f
    for _ in range(max_iter):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        for x, fx in ((c, fc), (d, fd)):
            if fx < best_f:
                best_x, best_f = x, fx
        if abs(last - best_f) <= tol * abs(best_f) and (b - a) < 1e-6:
            break
        last = best_f
        if b - a < 1e-15:
            break
    return best_x, best_f


def symbol_bounds(sym, grid=DEFAULT_GRID, refine_tol=REFINE_TOL):
    """Extreme eigenvalues of a Hessian-kind symbol over the unit circle.

    Samples ``grid`` uniform points on ``[0, pi]`` (the spectrum at ``-theta``
    is the conjugate one) then refines both extrema by golden-section search
    inside the neighbouring grid cells.
    """
    if grid < 16 or grid & (grid - 1):
        raise ValueError("grid must be a power of two no smaller than 16")
    theta = np.linspace(0.0, np.pi, grid)
    eig = symbol_eigenvalues(sym, theta)
    lo_vals = eig[:, 0]
    hi_vals = eig[:, -1]
    i_min = int(np.argmin(lo_vals))
    i_max = int(np.argmax(hi_vals))
    step = theta[1] - theta[0]

    def lam_min(t):
        return float(symbol_eigenvalues(sym, np.array([t]))[0, 0])

    def neg_lam_max(t):
        return -float(symbol_eigenvalues(sym, np.array([t]))[0, -1])

    def bracket(i):
        return max(theta[i] - step, 0.0), min(theta[i] + step, np.pi)

    t_min, v_min = _golden_refine(lam_min, *bracket(i_min), theta[i_min], lo_vals[i_min], refine_tol)
    t_max, v_max = _golden_refine(neg_lam_max, *bracket(i_max), theta[i_max], -hi_vals[i_max],
                                  refine_tol)
    return SpectralBounds(v_min, -v_max, grid, t_min, t_max)


def fourier_coefficients(sym, count, points=DEFAULT_GRID):
    """First ``count`` Fourier coefficients ``(1/2pi) int P(e^{it}) e^{ijt} dt``.

    Trapezoid rule on ``points`` equispaced nodes (spectrally accurate for
    these rational symbols).  For the prediction symbol coefficient ``j`` is
    ``A_c^j B``; for the Hessian symbol it is the block ``j`` places below
    the diagonal of the infinite Toeplitz Hessian.  All coefficients are real
    for real system data and are returned as real arrays.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if points < 4096:
        raise ValueError("use at least 4096 quadrature points")
    theta = 2.0 * np.pi * np.arange(points) / points
    values = eval_symbol(sym, theta)
    out = []
    for j in range(count):
        coeff = np.mean(values * np.exp(1j * j * theta)[:, None, None], axis=0)
        out.append(coeff.real)
    return out


@dataclass(frozen=True)
class ContainmentReport:
    N: int
    eig_min: float
    eig_max: float
    margin_low: float
    margin_high: float
    tol: float


def verify_containment(qp_or_H, bounds, N=None):
    """Check that the Hessian spectrum lies in ``[lambda_min, lambda_max]``.

    Accepts a :class:`CondensedQp` or a bare Hessian (then pass ``N``).
    Tolerance is ``1e-8 * lambda_max``.
    """
    if hasattr(qp_or_H, "H"):
        H, N = qp_or_H.H, qp_or_H.N
    else:
        H = np.asarray(qp_or_H)
    eig = matkit.sym_eig(H)
    tol = 1e-8 * bounds.lambda_max
    lo, hi = bounds.lambda_min, bounds.lambda_max
    if eig[0] < lo - tol:
        raise ContainmentViolated(float(eig[0]), N, (lo, hi))
    if eig[-1] > hi + tol:
        raise ContainmentViolated(float(eig[-1]), N, (lo, hi))
    return ContainmentReport(N, float(eig[0]), float(eig[-1]), float(eig[0] - lo),
                             float(hi - eig[-1]), tol)
