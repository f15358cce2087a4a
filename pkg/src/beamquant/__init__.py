"""Globally optimal joint beamforming and fronthaul quantization.

Solves the transmit-power minimization problem of a hub-plus-relays
downlink with per-user SINR constraints and per-relay fronthaul rate
constraints. The solver runs two nested fixed-point iterations (dual
multipliers, then primal powers with closed-form covariance recovery)
and certifies global optimality through the full KKT residual system
and a vanishing duality gap.
"""

from .bench import (
    OracleBracket,
    RunRecord,
    SweepConfig,
    brute_force_oracle,
    gen_instance,
    instance_rng,
    run_sweep,
)
from .certify import Certificate, CertTolerances, certify, gap
from .dual import (
    DualIterationState,
    FixedPointConfig,
    beta_map,
    build_c,
    build_gamma,
    dual_slack,
    recover_lambdas,
    solve_dual,
)
from .errors import (
    BeamquantError,
    DegenerateMultiplier,
    DimensionMismatch,
    InfeasibleError,
    InfeasibleOnGrid,
    MaxIterationsError,
    NonHermitianResidual,
    NonPositivePivot,
    NotPositiveDefinite,
    NumericalFailure,
    OrthogonalBeam,
    SchemaError,
    SingularTrailingBlock,
)
from .model import (
    DualSolution,
    PrimalSolution,
    ProblemInstance,
    dual_objective,
    fronthaul_matrix,
    fronthaul_rate,
    gamma_from_rate,
    objective,
    parse_dual,
    parse_instance,
    parse_solution,
    serialize_dual,
    serialize_instance,
    serialize_solution,
    sinr,
)
from .primal import beam_directions, power_map, recover_q, solve_primal
from .solver import SolveResult, solve

__version__ = "0.1.0"
