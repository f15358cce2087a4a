"""End-to-end solve: dual fixed point, then primal recovery."""

from dataclasses import dataclass

from .dual import DEFAULT_CONFIG, DualIterationState, FixedPointConfig, solve_dual
from .model import DualSolution, PrimalSolution, ProblemInstance
from .primal import PrimalIterationState, solve_primal


@dataclass
class SolveResult:
    primal: PrimalSolution
    dual: DualSolution
    dual_state: DualIterationState
    primal_state: PrimalIterationState


def solve(
    inst: ProblemInstance,
    config: FixedPointConfig = DEFAULT_CONFIG,
    dual_trace=None,
    primal_trace=None,
) -> SolveResult:
    """Solve an instance to global optimality.

    Raises InfeasibleError when the dual iterates diverge and
    NumericalFailure subclasses on numerical breakdowns.
    """
    dual, dual_state = solve_dual(inst, config, trace=dual_trace)
    primal, primal_state = solve_primal(inst, dual, config, trace=primal_trace)
    return SolveResult(primal, dual, dual_state, primal_state)
