"""Projected Fast Gradient Method for the condensed QP.

Constant-momentum Nesterov scheme for strongly convex quadratics with step
``1/Lf`` and momentum ``(sqrt(Lf) - sqrt(mu)) / (sqrt(Lf) + sqrt(mu))``,
stopped on the gradient-map norm ``Lf * ||y - proj(y - grad f(y) / Lf)||``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matkit
from .errors import InfeasibleProjection, NoConvergence


class Projection(enum.Enum):
    BOX = "box"
    POLYTOPE_DUAL = "polytope-dual"


class Status(enum.Enum):
    CONVERGED = "converged"
    ITER_CAP = "iter-cap"


@dataclass(frozen=True)
class FgmSettings:
    epsilon: float = 1e-5
    max_iters: int = 50_000
    # None picks BOX when every constraint row touches one variable
    projection: Optional[Projection] = None
    trace: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True, eq=False)
class FgmReport:
    v_star: np.ndarray
    iterations: int
    grad_map_norm: float
    status: Status
    u0: np.ndarray
    objective: float
    trace: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status is Status.CONVERGED


# --------------------------------------------------------------------------
# Projections


def project_box(y, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InfeasibleProjection("box has lo > hi")
    return np.minimum(np.maximum(y, lo), hi)


def box_from_rows(G, b):
    """Bounds ``(lo, hi)`` if every row of ``G v <= b`` involves one variable, else None."""
    G = np.asarray(G, dtype=float)
    nz = G != 0
    if G.shape[0] and not np.all(nz.sum(axis=1) == 1):
        return None
    k = G.shape[1]
    lo = np.full(k, -np.inf)
    hi = np.full(k, np.inf)
    for row, rhs, mask in zip(G, b, nz):
        j = int(np.flatnonzero(mask)[0])
        bound = rhs / row[j]
        if row[j] > 0:
            hi[j] = min(hi[j], bound)
        else:
            lo[j] = max(lo[j], bound)
    return lo, hi


DUAL_GUARD = 1e12
DUAL_MAX_ITERS = 200_000


class PolytopeProjector:
    """Euclidean projection onto ``{v : G v <= b}`` through its dual.

    The dual ``max_{lam >= 0} -1/2 ||G' lam||^2 + lam' (G y - b)`` is solved
    by an accelerated projected gradient on the nonnegative orthant with
    gradient-based restarts; the primal point is ``y - G' lam``.  The last
    multiplier is kept to warm-start the next call.
    """

    def __init__(self, G):
        self.G = np.asarray(G, dtype=float)
        self.GGt = self.G @ self.G.T
        if self.G.shape[0]:
            small = self.G.T @ self.G if self.G.shape[1] < self.G.shape[0] else self.GGt
            self.Ld = float(matkit.sym_eig(matkit.symmetrize(small))[-1])
        else:
            self.Ld = 0.0
        self.lam = np.zeros(self.G.shape[0])
        self.last_iterations = 0

    def project(self, y, b, tol=None, warm=True):
        G = self.G
        y = np.asarray(y, dtype=float)
        if G.shape[0] == 0:
            return y.copy()
        b = np.asarray(b, dtype=float)
        if tol is None:
            tol = 1e-10 * (1.0 + np.linalg.norm(y))
        r = G @ y - b
        if np.all(r <= 0):
            self.lam = np.zeros_like(r)
            self.last_iterations = 0
            return y.copy()
        if self.Ld == 0.0:
            raise InfeasibleProjection("zero constraint rows with violated bounds")
        lam = self.lam.copy() if warm else np.zeros_like(r)
        eta = lam.copy()
        t = 1.0
        radius = 1e6 * (1.0 + np.linalg.norm(y))
        for k in range(1, DUAL_MAX_ITERS + 1):
            grad = self.GGt @ eta - r
            lam_new = np.maximum(eta - grad / self.Ld, 0.0)
            diff = eta - lam_new
            if self.Ld * np.linalg.norm(diff) <= tol:
                lam = lam_new
                break
            if diff @ (lam_new - lam) > 0:
                t = 1.0
                eta = lam_new
            else:
                t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                eta = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
                t = t_new
            lam = lam_new
            if k % 64 == 0:
                Gtl = G.T @ lam
                dual = -0.5 * Gtl @ Gtl + lam @ r
                if dual > DUAL_GUARD or lam @ b < -np.linalg.norm(Gtl) * radius:
                    raise InfeasibleProjection("projection target set is empty")
        else:
            raise NoConvergence("polytope projection did not converge")
        self.lam = lam
        self.last_iterations = k
        return y - G.T @ lam


def project_polytope(y, G, b, tol=None):
    """Projection of ``y`` onto ``{v : G v <= b}`` (cold-started dual FGM)."""
    return PolytopeProjector(G).project(y, b, tol=tol, warm=False)


# --------------------------------------------------------------------------
# Solver


def _projector(qp, b, kind):
    G = qp.G
    if G.shape[0] == 0:
        return lambda y: y
    if kind is None:
        kind = Projection.BOX if box_from_rows(G, b) is not None else Projection.POLYTOPE_DUAL
    if kind is Projection.BOX:
        box = box_from_rows(G, b)
        if box is None:
            raise ValueError("constraints are not a box; use the polytope projection")
        lo, hi = box
        if np.any(lo > hi):
            raise InfeasibleProjection("box has lo > hi")
        return lambda y: project_box(y, lo, hi)
    proj = PolytopeProjector(G)
    return lambda y: proj.project(y, b)


def extreme_eigenvalues(H):
    w = matkit.sym_eig(H)
    return float(w[0]), float(w[-1])


def solve_fgm(qp, x_hat, settings=FgmSettings(), spectrum=None):
    """Cold-started projected FGM on ``qp`` for the measured state ``x_hat``.

    ``spectrum`` may carry precomputed ``(mu, Lf)`` of ``qp.H``.
    """
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    if x_hat.size != qp.n:
        raise ValueError(f"x_hat has {x_hat.size} entries, model has n={qp.n}")
    mu, Lf = spectrum if spectrum is not None else extreme_eigenvalues(qp.H)
    beta = (np.sqrt(Lf) - np.sqrt(mu)) / (np.sqrt(Lf) + np.sqrt(mu))
    q = qp.Phi @ x_hat
    b = qp.rhs(x_hat)
    project = _projector(qp, b, settings.projection)
    H = qp.H

    v = np.zeros(H.shape[0])
    y = v.copy()
    trace = []
    status = Status.ITER_CAP
    k = 0
    while True:
        v_next = project(y - (H @ y + q) / Lf)
        gm = Lf * np.linalg.norm(y - v_next)
        if settings.trace:
            trace.append((k, float(gm), float(qp.objective(v_next, x_hat))))
        if gm <= settings.epsilon:
            status = Status.CONVERGED
            break
        if k >= settings.max_iters:
            break
        y = v_next + beta * (v_next - v)
        v = v_next
        k += 1
    return FgmReport(
        v_star=v_next,
        iterations=k,
        grad_map_norm=float(gm),
        status=status,
        u0=qp.first_input(v_next, x_hat),
        objective=float(qp.objective(v_next, x_hat)),
        trace=trace,
    )
