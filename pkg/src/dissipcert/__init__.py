"""Stability certification for y_{k+1} = W phi(y_k) via dissipativity-domain
reduction, built on a hyperplane maximizer with an at-most-one-maximum
guarantee."""

from .errors import (
    ConvergenceFailure,
    DegenerateCurvature,
    DegenerateQ,
    DissipcertError,
    DomainError,
    PoleError,
    TheoremViolationError,
    UnboundedDomain,
    UnknownTransfer,
    UnsupportedDimension,
)
from .transfer import (
    AssumptionReport,
    GridSpec,
    TransferFunction,
    check_assumptions,
    make_builtin,
    make_custom,
    psi_checked,
)
from .spectra import (
    SpectralReport,
    build_diagonal,
    classify,
    g_prime_at_zero,
    secular_g,
)
from .hyperplane import (
    CriticalPoint,
    EarlyVerdict,
    MaximaReport,
    NormalizedProblem,
    RawProblem,
    ThreePointWitness,
    find_local_maxima,
    main_orthant_candidate,
    normalize,
    side_branch_g,
    side_orthant_candidates,
    three_point_expression,
)
from .oracle import OracleResult, grid_local_maxima, projected_ascent
from .dissipativity import (
    Certificate,
    Polytope,
    RnnModel,
    certify,
    default_directions,
    max_over_polytope,
    shrink,
    simulate,
    step,
)

__version__ = "0.1.0"
