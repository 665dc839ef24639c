"""Command-line workbench: condition-number sweeps, preconditioning, FGM runs.

Subcommands ``spectrum``, ``precondition``, ``solve`` and ``bench`` write CSV
to ``--out`` (stdout by default).  Exit status is 0 on success, 2 for bad
arguments, model files or configuration, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import matkit
from .condense import condense
from .errors import (
    DimensionMismatch,
    NotStable,
    ParseError,
    SymbolUnavailable,
    ToeplitzMpcError,
    UnknownName,
    WrongDomain,
)
from .fgm import FgmSettings, extreme_eigenvalues, solve_fgm
from .model import Terminal, builtin_systems, check_schur_stability, load_model
from .precond import (
    apply_to_qp,
    build_preconditioner,
    identity_preconditioner,
    preconditioned_symbol,
)
from .symbol import qp_symbol, symbol_bounds

NA = "N/A"
BENCH_HORIZON = 10
BENCH_DRAWS = 100


class ConfigError(ValueError):
    """Invalid combination of command-line options."""


# --------------------------------------------------------------------------
# Configuration


def parse_horizons(text):
    """``"1..60"``, ``"5,10,20"`` or a mix such as ``"1..5,10"`` (ascending, unique)."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                a, b = part.split("..", 1)
                a, b = int(a), int(b)
                if b < a:
                    raise ConfigError(f"empty horizon range {part!r}")
                out.update(range(a, b + 1))
            else:
                out.add(int(part))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad horizon list entry {part!r}") from None
    if not out:
        raise ConfigError("no horizons given")
    if min(out) < 1:
        raise ConfigError("horizons must be at least 1")
    return sorted(out)


@dataclass(frozen=True)
class RunConfig:
    system: str
    horizons: tuple
    terminal: Optional[str] = None
    prestabilize: bool = False
    precondition: str = "none"
    epsilon: float = 1e-5
    seed: int = 42
    out: Optional[str] = None
    identity_precond: bool = False
    nonconforming: bool = False
    radius: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ResolvedSystem:
    name: str
    model: object
    spec: object
    sample_radius: float = 1.0


def resolve_system(ref):
    """Catalog name or model-file path to a discrete ``ResolvedSystem``."""
    catalog = builtin_systems()
    if ref in catalog:
        e = catalog[ref]
        return ResolvedSystem(e.name, e.model.discrete(), e.spec, e.sample_radius)
    path = Path(ref)
    if not path.is_file():
        raise UnknownName(
            f"{ref!r} is neither a built-in system ({', '.join(sorted(catalog))}) nor a file"
        )
    model, spec = load_model(path)
    return ResolvedSystem(path.stem, model.discrete(), spec)


def default_terminal(model, prestabilize):
    """DARE when prestabilizing or for unstable plants, else the open-loop Lyapunov cost."""
    if prestabilize or not check_schur_stability(model.A).stable:
        return Terminal.DARE
    return Terminal.DLYAP


def conforming_terminal(model, prestabilize):
    """Terminal policy under which ``M = B'PB + R`` is the Hessian's diagonal block."""
    return Terminal.DARE if prestabilize else Terminal.DLYAP


def make_qp(system, N, terminal, prestabilize):
    spec = system.spec.with_horizon(N).with_terminal(terminal)
    return condense(system.model, spec, prestabilize=prestabilize)


def make_preconditioner(system, prestabilize, identity=False):
    if identity:
        return identity_preconditioner(system.model.m)
    return build_preconditioner(system.model, system.spec, prestabilize=prestabilize)


def _terminal_for(cfg, system):
    if cfg.terminal is not None:
        return Terminal(cfg.terminal)
    return default_terminal(system.model, cfg.prestabilize)


def _bound(sym_fn):
    try:
        return sym_fn().kappa
    except SymbolUnavailable:
        return None


# --------------------------------------------------------------------------
# Row builders (all arithmetic lives in the library calls)


def spectrum_rows(cfg, system):
    """``(N, cond_q, cond_p, cond_bound)``; bound is None without a symbol."""
    terminal = _terminal_for(cfg, system)
    bound = None
    rows = []
    for N in cfg.horizons:
        qp_q = make_qp(system, N, Terminal.SAME_AS_Q, cfg.prestabilize)
        qp_p = make_qp(system, N, terminal, cfg.prestabilize)
        if N == cfg.horizons[0]:
            bound = _bound(lambda: symbol_bounds(qp_symbol(qp_p)))
        rows.append((N, matkit.cond_spd(qp_q.H), matkit.cond_spd(qp_p.H), bound))
    return rows


def precondition_rows(cfg, system):
    """``(N, cond_orig, cond_strang, bound_strang)``; None marks N/A cells."""
    terminal = _terminal_for(cfg, system)
    try:
        pc = make_preconditioner(system, cfg.prestabilize, cfg.identity_precond)
    except NotStable:
        pc = None
    conforming = terminal is conforming_terminal(system.model, cfg.prestabilize)
    if pc is not None and not conforming and not (cfg.nonconforming or cfg.identity_precond):
        raise ConfigError(
            f"terminal policy {terminal.value!r} does not match the preconditioner's "
            "cost-to-go; pass --nonconforming to use it anyway"
        )
    rows = []
    bound = None
    for N in cfg.horizons:
        qp = make_qp(system, N, terminal, cfg.prestabilize)
        cond_orig = matkit.cond_spd(qp.H)
        if pc is None:
            rows.append((N, cond_orig, None, None))
            continue
        if bound is None:
            bound = _bound(lambda: symbol_bounds(preconditioned_symbol(qp_symbol(qp), pc)))
        rows.append((N, cond_orig, matkit.cond_spd(apply_to_qp(qp, pc).H), bound))
    return rows


def sample_states(n, radius, count, seed):
    """``count`` states uniform on the sphere of the given radius (seeded)."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((count, n))
    return radius * X / np.linalg.norm(X, axis=1, keepdims=True)


@dataclass(frozen=True)
class BenchRow:
    system: str
    prestab: bool
    precond: str
    kappa: Optional[float]
    median_iters: Optional[float]
    p90_iters: Optional[float]


def bench_cell(system, prestab, precond, states, epsilon=1e-5, N=BENCH_HORIZON):
    """Condition number and FGM iteration statistics for one table cell."""
    qp = make_qp(system, N, default_terminal(system.model, prestab), prestab)
    if precond == "strang":
        try:
            qp = apply_to_qp(qp, make_preconditioner(system, prestab))
        except NotStable:
            return BenchRow(system.name, prestab, precond, None, None, None)
    spectrum = extreme_eigenvalues(qp.H)
    settings = FgmSettings(epsilon=epsilon)
    iters = [solve_fgm(qp, x, settings, spectrum=spectrum).iterations for x in states]
    return BenchRow(system.name, prestab, precond, matkit.cond_spd(qp.H),
                    float(np.median(iters)), float(np.percentile(iters, 90)))


def bench_rows(systems, epsilon, seed, draws=BENCH_DRAWS, radius=None):
    rows = []
    for system in systems:
        r = system.sample_radius if radius is None else radius
        states = sample_states(system.model.n, r, draws, seed)
        for prestab in (False, True):
            for precond in ("none", "strang"):
                rows.append(bench_cell(system, prestab, precond, states, epsilon))
    return rows


# --------------------------------------------------------------------------
# Output


def _cell(x):
    if x is None:
        return NA
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def render_csv(header, rows, empty=NA):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([empty if v is None else _cell(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# Commands


def cmd_spectrum(cfg):
    system = resolve_system(cfg.system)
    rows = spectrum_rows(cfg, system)
    _emit(render_csv(["N", "cond_q", "cond_p", "cond_bound"], rows, empty=""), cfg.out)
    return rows


def cmd_precondition(cfg):
    system = resolve_system(cfg.system)
    rows = precondition_rows(cfg, system)
    _emit(render_csv(["N", "cond_orig", "cond_strang", "bound_strang"], rows), cfg.out)
    return rows


def _parse_vector(text, n):
    try:
        x = np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])
    except ValueError:
        raise ConfigError(f"bad state vector {text!r}") from None
    if x.size != n:
        raise ConfigError(f"state vector has {x.size} entries, model has n={n}")
    return x


def cmd_solve(cfg, x0=None, trace=None, unconstrained=False):
    system = resolve_system(cfg.system)
    if len(cfg.horizons) != 1:
        raise ConfigError("solve takes a single horizon")
    N = cfg.horizons[0]
    if x0 is None:
        radius = system.sample_radius if cfg.radius is None else cfg.radius
        x_hat = sample_states(system.model.n, radius, 1, cfg.seed)[0]
    else:
        x_hat = _parse_vector(x0, system.model.n)
    qp = make_qp(system, N, _terminal_for(cfg, system), cfg.prestabilize)
    if unconstrained:
        qp = qp.without_constraints()
    if cfg.precondition == "strang" or cfg.identity_precond:
        qp = apply_to_qp(qp, make_preconditioner(system, cfg.prestabilize, cfg.identity_precond))
    report = solve_fgm(qp, x_hat, FgmSettings(epsilon=cfg.epsilon, trace=trace is not None))
    lines = [
        f"system: {system.name}",
        f"x_hat: {' '.join(repr(float(v)) for v in x_hat)}",
        f"iterations: {report.iterations}",
        f"status: {report.status.value}",
        f"grad_map_norm: {report.grad_map_norm!r}",
        f"u0: {' '.join(repr(float(v)) for v in report.u0)}",
    ]
    _emit("\n".join(lines) + "\n", cfg.out)
    if trace is not None:
        _emit(render_csv(["k", "grad_map_norm", "objective"], report.trace), trace)
    return report


def cmd_bench(cfg, systems, distillation=None):
    """One row per (system, prestab, precond); distillation needs its model file."""
    resolved = []
    for name in systems:
        if name == "distillation":
            if distillation is None:
                print("warning: distillation column matrices are not shipped; pass "
                      "--distillation <model file> to include them", file=sys.stderr)
                continue
            resolved.append(replace(resolve_system(distillation), name="distillation"))
        else:
            resolved.append(resolve_system(name))
    rows = bench_rows(resolved, cfg.epsilon, cfg.seed, radius=cfg.radius)
    table = [(r.system, r.prestab, r.precond, r.kappa, r.median_iters, r.p90_iters) for r in rows]
    _emit(render_csv(["system", "prestab", "precond", "kappa", "median_iters", "p90_iters"],
                     table), cfg.out)
    return rows


# --------------------------------------------------------------------------
# Argument parsing


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _seed(text):
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= s < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return s


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", default="schur-stable",
                        help="built-in system name or model file path")
    common.add_argument("--n", dest="horizons", default="10", help="horizons: a..b or a,b,c")
    common.add_argument("--terminal", choices=["q", "dare", "dlyap"])
    common.add_argument("--prestabilize", action="store_true")
    common.add_argument("--precondition", choices=["none", "strang"], default="none")
    common.add_argument("--epsilon", type=_positive_float, default=1e-5)
    common.add_argument("--seed", type=_seed, default=42)
    common.add_argument("--radius", type=_positive_float,
                        help="radius of random initial states (default: per system)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--identity-precond", action="store_true",
                        help="debug: use L = I as the preconditioner")
    common.add_argument("--nonconforming", action="store_true",
                        help="allow the block preconditioner with a non-matching terminal cost")

    p = argparse.ArgumentParser(prog="toeplitz-mpc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="condition number versus horizon")
    sub.add_parser("precondition", parents=[common], help="effect of the block preconditioner")
    s = sub.add_parser("solve", parents=[common], help="run the FGM once")
    s.add_argument("--x0", help="initial state, comma separated (default: seeded random)")
    s.add_argument("--trace", help="write the per-iteration trace CSV here")
    s.add_argument("--unconstrained", action="store_true", help="debug: drop all constraints")
    b = sub.add_parser("bench", parents=[common], help="condition numbers and iteration counts")
    b.add_argument("--systems", default="schur-stable,pendulum,distillation",
                   help="comma-separated systems for the table")
    b.add_argument("--distillation", metavar="PATH",
                   help="model file with the distillation column data")
    return p


def config_from_args(args):
    return RunConfig(
        system=args.system,
        horizons=tuple(parse_horizons(args.horizons)),
        terminal=args.terminal,
        prestabilize=args.prestabilize,
        precondition=args.precondition,
        epsilon=args.epsilon,
        seed=args.seed,
        out=args.out,
        identity_precond=args.identity_precond,
        nonconforming=args.nonconforming,
        radius=args.radius,
    )


CONFIG_ERRORS = (ValueError, ParseError, UnknownName, DimensionMismatch, WrongDomain, OSError)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "spectrum":
            cmd_spectrum(cfg)
        elif args.command == "precondition":
            cmd_precondition(cfg)
        elif args.command == "solve":
            cmd_solve(cfg, args.x0, args.trace, args.unconstrained)
        else:
            systems = [s.strip() for s in args.systems.split(",") if s.strip()]
            cmd_bench(cfg, systems, args.distillation)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToeplitzMpcError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
