"""fracfold: singular nonlocal elliptic solves with fold continuation on an interval."""

from .errors import (
    AssemblyError,
    BracketViolation,
    ConvergenceError,
    GridError,
    SupersolutionNotFound,
)
from .operator import (
    EigenPair,
    Grid,
    NonlocalOperator,
    apply,
    assemble_operator,
    build_grid,
    eigen_smallest,
    green_column,
    normalization_constant,
    solve_dirichlet,
)
from .continuation import (
    Branch,
    BranchPoint,
    FoldInfo,
    FoldPolicy,
    TracePolicy,
    asymptotic_bifurcation_probe,
    fold_round,
    multiplicity_scan,
    trace_minimal,
    uniqueness_probe,
)
from .linearization import (
    LinearizedOperator,
    SensitivityBundle,
    d2A_directional,
    fredholm_monitor,
    lambda1,
    linearized_operator,
    sensitivity_bundle,
)
from .problem import Nonlinearity, ProblemSpec, RegularizedSpec, no_nonlinearity, power_nonlinearity, regularize
from .singular import (
    SolutionField,
    monotone_iterate,
    scale_pure_singular,
    solve_A,
    solve_min,
    solve_pure_singular,
    solve_regularized,
)
from .weights import (
    NormReport,
    Regime,
    WeightProfile,
    build_weight_profile,
    classify_regime,
    cone_norms,
    distance_field,
    fit_boundary_exponent,
    hs_membership_indicator,
    holder_seminorm,
    weight_k,
)

__version__ = "0.1.0"
