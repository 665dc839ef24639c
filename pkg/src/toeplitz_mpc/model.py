"""LTI models, constrained-LQR problem data, discretization and model files."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import matkit
from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    ParseError,
    Singular,
    UnknownName,
    WrongDomain,
)


class Terminal(enum.Enum):
    """Terminal-cost policy of a CLQR problem."""

    SAME_AS_Q = "q"
    DARE = "dare"
    DLYAP = "dlyap"
    EXPLICIT = "explicit"


class Stability(enum.Enum):
    SCHUR_STABLE = "schur-stable"
    NOT_SCHUR_STABLE = "not-schur-stable"
    MARGINAL = "marginal"


def _as_matrix(a, name):
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LtiModel:
    """State-space pair ``(A, B)``.

    ``sample_time`` on a discrete model records the ZOH period it was
    produced with; on a continuous model it is the period to discretize with
    (``None`` means not yet chosen).
    """

    A: np.ndarray
    B: np.ndarray
    domain: str = "discrete"
    sample_time: Optional[float] = None

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        if self.domain not in ("discrete", "continuous"):
            raise ValueError(f"unknown time domain {self.domain!r}")
        if self.sample_time is not None and not self.sample_time > 0:
            raise ValueError("sample_time must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def is_discrete(self):
        return self.domain == "discrete"

    def discrete(self):
        """This model if discrete, else its ZOH discretization at ``sample_time``."""
        if self.is_discrete:
            return self
        if self.sample_time is None:
            raise WrongDomain("continuous model has no sample_time to discretize with")
        return zoh_discretize(self, self.sample_time)


@dataclass(frozen=True, eq=False)
class ClqrSpec:
    """Cost, terminal policy, stage constraints ``Eu u + Ex x <= c`` and horizon."""

    Q: np.ndarray
    R: np.ndarray
    Eu: np.ndarray
    Ex: np.ndarray
    c: np.ndarray
    N: int = 10
    terminal: Terminal = Terminal.DARE
    P: Optional[np.ndarray] = None

    def __post_init__(self):
        Q = _as_matrix(self.Q, "Q")
        R = _as_matrix(self.R, "R")
        for name, M in (("Q", Q), ("R", R)):
            if M.shape[0] != M.shape[1]:
                raise DimensionMismatch(f"{name} must be square, got {M.shape}")
            if not matkit.is_positive_definite(M):
                raise NotPositiveDefinite(f"{name} is not symmetric positive definite")
        n, m = Q.shape[0], R.shape[0]
        c = np.array(self.c, dtype=float).reshape(-1)
        l = c.size
        Eu = np.array(self.Eu, dtype=float).reshape(l, m)
        Ex = np.array(self.Ex, dtype=float).reshape(l, n)
        if not np.all(np.isfinite(c)):
            raise ValueError("constraint bounds must be finite")
        for a in (Eu, Ex, c):
            a.setflags(write=False)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.N}")
        terminal = Terminal(self.terminal)
        P = self.P
        if terminal is Terminal.EXPLICIT:
            if P is None:
                raise ValueError("explicit terminal policy needs P")
            P = _as_matrix(P, "P")
            if P.shape != (n, n):
                raise DimensionMismatch(f"P must be {n}x{n}, got {P.shape}")
            if not matkit.is_positive_definite(P):
                raise NotPositiveDefinite("P is not symmetric positive definite")
        elif P is not None:
            raise ValueError("P is only accepted with the explicit terminal policy")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Eu", Eu)
        object.__setattr__(self, "Ex", Ex)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "terminal", terminal)
        object.__setattr__(self, "P", P)

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def m(self):
        return self.R.shape[0]

    @property
    def l(self):
        return self.c.size

    def with_horizon(self, N):
        return replace(self, N=N)

    def with_terminal(self, terminal, P=None):
        return replace(self, terminal=Terminal(terminal), P=P)

    def unconstrained(self):
        return replace(self, Eu=np.zeros((0, self.m)), Ex=np.zeros((0, self.n)), c=np.zeros(0))

    def check_against(self, model):
        if (self.n, self.m) != (model.n, model.m):
            raise DimensionMismatch(
                f"cost is sized for n={self.n}, m={self.m}; model has n={model.n}, m={model.m}"
            )


def input_box(bounds):
    """Stage rows ``[I; -I] u <= [hi; hi]`` for symmetric bounds ``|u_i| <= hi_i``."""
    hi = np.asarray(bounds, dtype=float).reshape(-1)
    m = hi.size
    return np.vstack([np.eye(m), -np.eye(m)]), np.concatenate([hi, hi])


# --------------------------------------------------------------------------
# Discretization and stability


def zoh_discretize(model, Ts):
    """Zero-order-hold discretization via one augmented matrix exponential."""
    if model.is_discrete:
        raise WrongDomain("model is already discrete")
    if not Ts > 0:
        raise ValueError("sample time must be positive")
    n, m = model.n, model.m
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = model.A * Ts
    aug[:n, n:] = model.B * Ts
    E = matkit.mat_exp(aug)
    return LtiModel(E[:n, :n], E[:n, n:], "discrete", float(Ts))


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    verdict: Stability
    X: Optional[np.ndarray] = None
    note: str = ""

    @property
    def stable(self):
        return self.verdict is Stability.SCHUR_STABLE


# Radius inflation used to split singular Lyapunov systems into marginal
# (spectral radius within 1 + _MARGIN) and unstable cases.
_MARGIN = 1e-3


def _lyapunov_kron(A, Q):
    n = A.shape[0]
    At = A.T
    lhs = np.eye(n * n) - matkit.kron(At, At)
    X = matkit.lu_solve(lhs, Q.reshape(-1)).reshape(n, n)
    return matkit.symmetrize(X)


def check_schur_stability(A):
    """Certify ``rho(A) < 1`` by solving ``A' X A - X = -I``.

    A singular Kronecker system means some eigenvalue product equals one.
    That case is split by repeating the test on ``A / (1 + 1e-3)``: if the
    shrunk matrix is stable the verdict is MARGINAL, otherwise the plant has
    a mode clearly outside the unit circle and is NOT_SCHUR_STABLE.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    try:
        X = _lyapunov_kron(A, np.eye(n))
    except Singular:
        shrunk = check_schur_stability(A / (1.0 + _MARGIN))
        if shrunk.stable:
            return StabilityCertificate(Stability.MARGINAL, note="eigenvalue on the unit circle")
        return StabilityCertificate(
            Stability.NOT_SCHUR_STABLE,
            note="singular Lyapunov system with a mode outside the unit circle",
        )
    if not matkit.is_positive_definite(X):
        return StabilityCertificate(Stability.NOT_SCHUR_STABLE, note="Lyapunov solution not PD")
    defect = np.linalg.norm(A.T @ X @ A - X + np.eye(n))
    if defect > 1e-8 * np.linalg.norm(X):
        return StabilityCertificate(
            Stability.MARGINAL, note=f"Lyapunov defect {defect:.2e} too large"
        )
    return StabilityCertificate(Stability.SCHUR_STABLE, X=X)


# --------------------------------------------------------------------------
# Model files

_MATRIX_SECTIONS = ("A", "B", "Q", "R", "P", "Eu", "Ex")
_REQUIRED = ("A", "B", "Q", "R")


def _number(tok, line_no, col):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", line_no, col) from None


def _split(line):
    """Tokens of a line with their 1-based columns; ``#`` starts a comment."""
    line = line.split("#", 1)[0]
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse_model_text(text):
    """Parse the model-file text into a dict of raw sections."""
    lines = text.splitlines()
    sections = {}
    i = 0

    def next_data_line(what, header_line):
        nonlocal i
        while i < len(lines):
            raw = lines[i].rstrip("\r")
            i += 1
            if raw.strip() and not raw.lstrip().startswith("#"):
                return raw, i
        raise ParseError(f"unexpected end of file inside section {what}", header_line)

    while i < len(lines):
        raw = lines[i].rstrip("\r")
        i += 1
        line_no = i
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        toks = _split(raw)
        name, name_col = toks[0]
        if name in sections:
            raise ParseError(f"duplicate section {name}", line_no, name_col)
        args = toks[1:]
        if name in _MATRIX_SECTIONS:
            if len(args) != 2:
                raise ParseError(f"section {name} needs '<rows> <cols>'", line_no, name_col)
            try:
                rows, cols = (int(a) for a, _ in args)
            except ValueError:
                raise ParseError(f"bad dimensions for {name}", line_no, args[0][1]) from None
            if rows < 0 or cols < 0:
                raise ParseError(f"negative dimensions for {name}", line_no, args[0][1])
            data = np.zeros((rows, cols))
            for r in range(rows):
                row_raw, row_no = next_data_line(name, line_no)
                vals = _split(row_raw)
                if len(vals) != cols:
                    raise ParseError(
                        f"section {name} row {r + 1} has {len(vals)} values, expected {cols}",
                        row_no,
                        vals[min(len(vals), cols) - 1][1] if vals else 1,
                    )
                data[r] = [_number(t, row_no, c) for t, c in vals]
            sections[name] = data
        elif name == "c":
            if len(args) != 1:
                raise ParseError("section c needs '<len>'", line_no, name_col)
            try:
                length = int(args[0][0])
            except ValueError:
                raise ParseError("bad length for c", line_no, args[0][1]) from None
            if length == 0:
                sections[name] = np.zeros(0)
                continue
            row_raw, row_no = next_data_line(name, line_no)
            vals = _split(row_raw)
            if len(vals) != length:
                raise ParseError(
                    f"section c has {len(vals)} values, expected {length}", row_no, 1
                )
            sections[name] = np.array([_number(t, row_no, c) for t, c in vals])
        elif name in ("N", "Ts", "domain", "terminal"):
            if len(args) != 1:
                raise ParseError(f"section {name} needs exactly one value", line_no, name_col)
            tok, col = args[0]
            if name == "N":
                try:
                    sections[name] = int(tok)
                except ValueError:
                    raise ParseError(f"N must be an integer, got {tok!r}", line_no, col) from None
            elif name == "Ts":
                sections[name] = _number(tok, line_no, col)
            elif name == "domain":
                if tok not in ("discrete", "continuous"):
                    raise ParseError(f"unknown domain {tok!r}", line_no, col)
                sections[name] = tok
            else:
                if tok not in ("q", "dare", "dlyap"):
                    raise ParseError(f"unknown terminal policy {tok!r}", line_no, col)
                sections[name] = tok
        else:
            raise ParseError(f"unknown section {name!r}", line_no, name_col)
    for name in _REQUIRED:
        if name not in sections:
            raise ParseError(f"missing required section {name}")
    return sections


def model_from_sections(sections):
    A, B = sections["A"], sections["B"]
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    n, m = A.shape[0], B.shape[1]
    if B.shape[0] != n:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, A has {n}")
    if sections["Q"].shape != (n, n):
        raise DimensionMismatch(f"Q must be {n}x{n}, got {sections['Q'].shape}")
    if sections["R"].shape != (m, m):
        raise DimensionMismatch(f"R must be {m}x{m}, got {sections['R'].shape}")
    c = sections.get("c", np.zeros(0))
    l = c.size
    Eu = sections.get("Eu", np.zeros((l, m)))
    Ex = sections.get("Ex", np.zeros((l, n)))
    if Eu.shape != (l, m):
        raise DimensionMismatch(f"Eu must be {l}x{m}, got {Eu.shape}")
    if Ex.shape != (l, n):
        raise DimensionMismatch(f"Ex must be {l}x{n}, got {Ex.shape}")
    domain = sections.get("domain", "discrete")
    model = LtiModel(A, B, domain, sections.get("Ts"))
    if "P" in sections:
        if "terminal" in sections:
            raise DimensionMismatch("give either a P section or a terminal policy, not both")
        terminal, P = Terminal.EXPLICIT, sections["P"]
    else:
        terminal, P = Terminal(sections.get("terminal", "dare")), None
    spec = ClqrSpec(sections["Q"], sections["R"], Eu, Ex, c, sections.get("N", 10), terminal, P)
    return model, spec


def load_model(path):
    """Read a model file and return ``(LtiModel, ClqrSpec)``.

    A continuous model keeps its ``Ts`` as ``sample_time``; call
    :meth:`LtiModel.discrete` to obtain the ZOH discretization.
    """
    text = Path(path).read_text(encoding="utf-8")
    return model_from_sections(parse_model_text(text))


def _fmt(x):
    return repr(float(x))


def dump_model(model, spec):
    out = [f"domain {model.domain}"]
    if model.sample_time is not None:
        out.append(f"Ts {_fmt(model.sample_time)}")

    def mat(name, M):
        out.append(f"{name} {M.shape[0]} {M.shape[1]}")
        out.extend(" ".join(_fmt(v) for v in row) for row in M)

    mat("A", model.A)
    mat("B", model.B)
    mat("Q", spec.Q)
    mat("R", spec.R)
    if spec.terminal is Terminal.EXPLICIT:
        mat("P", spec.P)
    else:
        out.append(f"terminal {spec.terminal.value}")
    if spec.l:
        mat("Eu", spec.Eu)
        mat("Ex", spec.Ex)
    out.append(f"c {spec.l}")
    if spec.l:
        out.append(" ".join(_fmt(v) for v in spec.c))
    out.append(f"N {spec.N}")
    return "\n".join(out) + "\n"


def save_model(model, spec, path):
    Path(path).write_text(dump_model(model, spec), encoding="utf-8")


# --------------------------------------------------------------------------
# Built-in example systems


@dataclass(frozen=True, eq=False)
class SystemEntry:
    name: str
    model: LtiModel
    spec: ClqrSpec
    description: str = field(default="")
    # radius of the random initial states used for iteration benchmarks,
    # chosen so that the constraints bind for a good share of the draws
    sample_radius: float = 1.0


def _schur_stable():
    A = [[0.7, -0.1, 0.0, 0.0],
         [0.2, -0.5, 0.1, 0.0],
         [0.0, 0.1, 0.1, 0.0],
         [0.5, 0.0, 0.5, 0.5]]
    B = [[0.0, 0.1],
         [0.1, 1.0],
         [0.1, 0.0],
         [0.0, 0.0]]
    Eu, c = input_box([0.5, 0.5])
    spec = ClqrSpec(np.diag([10.0, 20.0, 30.0, 40.0]), np.diag([10.0, 20.0]),
                    Eu, np.zeros((4, 4)), c, N=10, terminal=Terminal.DLYAP)
    return SystemEntry("schur-stable", LtiModel(A, B), spec,
                       "four-state two-input Schur-stable plant, |u| <= 0.5", 5.0)


def _pendulum(g=9.8067, b=1.0, length=0.21, Ts=0.02):
    A = [[0.0, 1.0, 0.0, 0.0],
         [3.0 * g / (2.0 * length), -b, 0.0, 0.0],
         [0.0, 0.0, 0.0, 1.0],
         [0.0, 0.0, 0.0, 0.0]]
    B = [[0.0], [3.0 / (2.0 * length)], [0.0], [1.0]]
    Eu, c = input_box([10.0])
    spec = ClqrSpec(np.diag([1000.0, 1.0, 100.0, 1.0]), np.array([[10.0]]),
                    Eu, np.zeros((2, 4)), c, N=10, terminal=Terminal.DARE)
    return SystemEntry("pendulum", LtiModel(A, B, "continuous", Ts), spec,
                       "linearized inverted pendulum (continuous, ZOH at 0.02 s), |u| <= 10", 0.5)


class _Catalog(dict):
    def __missing__(self, key):
        raise UnknownName(
            f"no built-in system named {key!r} (available: {', '.join(sorted(self))})"
        )


def builtin_systems():
    """Named catalog of the example systems shipped with the package."""
    return _Catalog((e.name, e) for e in (_schur_stable(), _pendulum()))


def get_system(name):
    return builtin_systems()[name]
