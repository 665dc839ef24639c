"""Condensed constrained-LQR QPs, their block-Toeplitz spectral bounds, a
horizon-independent block preconditioner and a projected fast gradient solver.
"""
from . import matkit
from .condense import CondensedQp, PredictionPair, build_prediction, condense
from .errors import (
    ContainmentViolated,
    DimensionMismatch,
    InfeasibleProjection,
    NoConvergence,
    NonHermitian,
    NonSymmetric,
    NotPositiveDefinite,
    NotStable,
    ParseError,
    Singular,
    SingularResolvent,
    SymbolUnavailable,
    ToeplitzMpcError,
    UnknownName,
    WrongDomain,
)
from .fgm import (
    FgmReport,
    FgmSettings,
    PolytopeProjector,
    Projection,
    Status,
    project_box,
    project_polytope,
    solve_fgm,
)
from .model import (
    ClqrSpec,
    LtiModel,
    Stability,
    StabilityCertificate,
    SystemEntry,
    Terminal,
    builtin_systems,
    check_schur_stability,
    dump_model,
    get_system,
    input_box,
    load_model,
    parse_model_text,
    save_model,
    zoh_discretize,
)
from .precond import (
    BlockPreconditioner,
    apply_to_qp,
    build_preconditioner,
    identity_preconditioner,
    preconditioned_symbol,
)
from .riccati import DareSolution, lqr_gain, resolve_terminal, solve_dare, solve_dlyap
from .symbol import (
    MatrixSymbol,
    SpectralBounds,
    SymbolKind,
    eval_symbol,
    fourier_coefficients,
    hessian_symbol,
    prediction_symbol,
    qp_symbol,
    symbol_bounds,
    verify_containment,
)

__version__ = "0.1.0"
