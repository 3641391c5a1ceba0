"""Barycentric multi-marginal optimal transport and particle flows.

The package solves the discrete multi-marginal transport problem whose
ground cost is the infimal convolution of Euclidean power costs,
extracts the induced p-Wasserstein barycenter, builds the straight-line
particle flows that realize the optimal value dynamically, and certifies
numerically that every route reports the same number.
"""

from .exceptions import (
    BaryflowError,
    ConvergenceError,
    CycleLimitError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    InfeasibleError,
    MarginalMismatchError,
    NegativeWeightError,
    NonFiniteCoordinateError,
    NonFiniteImageError,
    ProductGridError,
    SolverError,
    TimeOutOfRangeError,
    UnboundedError,
    ValidationError,
    WeightSumError,
    WrongExponentError,
)
from .measures import (
    MERGE_TOL,
    Coupling,
    DiscreteMeasure,
    MultiPlan,
    canonicalize,
    load_measure,
    marginal,
    measure_from_dict,
    measure_to_csv,
    measure_to_dict,
    measures_close,
    pushforward,
    save_measure,
    validate_coupling,
    validate_measure,
    validate_multiplan,
)
from .linprog import LpProblem, LpSolution, solve_lp
from .infconv import (
    BarycenterResult,
    barycenter_point,
    batch_barycenters,
    check_exponent,
    infconv_cost,
    power_cost,
    power_cost_gradient,
)
from .transport import (
    MAX_GRID,
    DualCertificate,
    MmotResult,
    PairwiseResult,
    barycenter_potentials,
    c_transform,
    dual_feasibility_check,
    extract_barycenter,
    pairwise_cost_matrix,
    solve_mmot,
    solve_pairwise,
    solve_pairwise_entropic,
    stationarity_residual,
    wb_value,
)
from .flows import (
    CouplingFlow,
    ParticleFlow,
    build_coupling_flow,
    build_particle_flow,
    continuity_residual,
    coupling_flow_action,
    coupling_snapshot,
    export_coupling_frames,
    export_flow_frames,
    flow_action,
    flow_marginal,
    flow_start_measure,
    momentum_balance_residual,
    snapshot,
    velocity_balance_residual,
)
from .verify import (
    CheckOutcome,
    VerificationReport,
    random_marginals,
    run_verification,
    translation_vector,
)

__version__ = "0.1.0"

__all__ = [
    "BaryflowError",
    "ValidationError",
    "NegativeWeightError",
    "WeightSumError",
    "DimensionMismatchError",
    "NonFiniteCoordinateError",
    "NonFiniteImageError",
    "MarginalMismatchError",
    "IndexOutOfRangeError",
    "TimeOutOfRangeError",
    "WrongExponentError",
    "SolverError",
    "InfeasibleError",
    "UnboundedError",
    "CycleLimitError",
    "ConvergenceError",
    "ProductGridError",
    "MERGE_TOL",
    "MAX_GRID",
    "DiscreteMeasure",
    "Coupling",
    "MultiPlan",
    "validate_measure",
    "validate_coupling",
    "validate_multiplan",
    "canonicalize",
    "pushforward",
    "marginal",
    "measures_close",
    "measure_to_dict",
    "measure_from_dict",
    "save_measure",
    "load_measure",
    "measure_to_csv",
    "LpProblem",
    "LpSolution",
    "solve_lp",
    "BarycenterResult",
    "check_exponent",
    "power_cost",
    "power_cost_gradient",
    "barycenter_point",
    "batch_barycenters",
    "infconv_cost",
    "PairwiseResult",
    "MmotResult",
    "DualCertificate",
    "pairwise_cost_matrix",
    "solve_pairwise",
    "solve_pairwise_entropic",
    "solve_mmot",
    "stationarity_residual",
    "extract_barycenter",
    "wb_value",
    "c_transform",
    "dual_feasibility_check",
    "barycenter_potentials",
    "ParticleFlow",
    "CouplingFlow",
    "build_particle_flow",
    "build_coupling_flow",
    "snapshot",
    "coupling_snapshot",
    "flow_start_measure",
    "flow_marginal",
    "flow_action",
    "coupling_flow_action",
    "velocity_balance_residual",
    "momentum_balance_residual",
    "continuity_residual",
    "export_flow_frames",
    "export_coupling_frames",
    "CheckOutcome",
    "VerificationReport",
    "run_verification",
    "translation_vector",
    "random_marginals",
    "__version__",
]
