"""Dual-side solver: fixed-point iteration on the SINR multipliers.

The dual optimality system is solved in two nested layers. Given the
SINR multipliers beta, the fronthaul multipliers Lambda_m are recovered
in closed form by a forward recursion that zeroes the dual slack matrix
D row by row (the structured zero-prefix pattern of lambda_m makes the
recursion triangular). Given the Lambda_m, each beta_k has the closed
form 1 / (h_k^H C_k^{-1} h_k). Composing the two gives the interference
map I(beta); its fixed point, reached by plain iteration from beta = 0,
is the dual optimum. I is a standard interference function (positive,
monotone, scalable), so the iteration converges monotonically whenever
the problem is feasible and diverges otherwise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleError,
    MaxIterationsError,
    NonPositivePivot,
)
from .linalg import DEFAULT_TOL, solve_hermitian_pd
from .model import DualSolution, ProblemInstance


@dataclass(frozen=True)
class FixedPointConfig:
    """Shared configuration of both fixed-point loops."""

    tol: float = 1e-10
    max_iters: int = 10_000
    divergence_bound: float = 1e12
    # Declare divergence after this many consecutive iterations whose
    # absolute increments fail to decrease (marginally infeasible
    # instances grow linearly and would otherwise run to max_iters).
    stall_window: int = 250


DEFAULT_CONFIG = FixedPointConfig()


@dataclass
class DualIterationState:
    """Outcome of the dual fixed-point loop."""

    beta: np.ndarray
    iteration: int
    residual: float
    status: str  # "Converged" | "MaxIterations" | "Diverged"


def build_gamma(inst: ProblemInstance, beta) -> np.ndarray:
    """Gamma = I + sum_k beta_k gamma_k h_k h_k^H (positive definite)."""
    beta = np.asarray(beta, dtype=float)
    w = beta * inst.sinr_targets
    A = inst.channels
    return np.eye(inst.M, dtype=complex) + (A * w[:, None]).T @ A.conj()


def recover_lambdas(inst: ProblemInstance, beta) -> np.ndarray:
    """Closed-form recovery of the structured multiplier vectors.

    Returns an (M, M) array whose row m is lambda_m (zero prefix, real
    nonnegative leading entry). The rows are the unique vectors whose
    rank-one outer products zero the dual slack matrix D at the given
    beta. Recursion over m on the shrinking residual block R of Gamma:

        Lambda_m[m, m] = R[0, 0] / (eta_m - 1)
        Lambda_m[m, j] = R[0, j - m] / eta_m          (j > m)
        R <- R[1:, 1:] - eta_m * Lambda_m[m+1:, m+1:]

    Raises NonPositivePivot when a residual pivot R[0, 0] is not
    positive beyond tolerance.
    """
    M = inst.M
    eta = inst.eta
    R = build_gamma(inst, beta)
    scale = 1.0 + float(np.max(np.abs(R)))
    floor = M * np.finfo(float).eps * scale
    lambdas = np.zeros((M, M), dtype=complex)
    for m in range(M):
        pivot = R[0, 0].real
        if pivot <= floor:
            raise NonPositivePivot(
                f"residual pivot {pivot:.3e} at relay {m + 1} is not positive"
            )
        lmm = pivot / (eta[m] - 1.0)
        root = np.sqrt(lmm)
        lambdas[m, m] = root
        if m + 1 < M:
            top = R[0, 1:] / eta[m]  # Lambda_m[m, m+1:]
            tail = top.conj() / root  # lambda entries: Lambda_m[j, m] / root
            lambdas[m, m + 1 :] = tail
            R = R[1:, 1:] - eta[m] * np.outer(tail, tail.conj())
    return lambdas


def dual_slack(inst: ProblemInstance, beta, lambdas) -> np.ndarray:
    """Dual slack matrix D; identically zero at structured multipliers.

    D = Gamma - sum_m (eta_m * Lambda_m - Lambda_m[m, m] * E_m), using
    that Lambda_m already vanishes outside rows/columns m..M-1.
    """
    D = build_gamma(inst, beta)
    for m in range(inst.M):
        lam = lambdas[m]
        big = np.outer(lam, lam.conj())
        D -= inst.eta[m] * big
        D[m, m] += big[m, m].real
    return D


def build_c(inst: ProblemInstance, beta, lambdas, k: int) -> np.ndarray:
    """Dual constraint matrix C_k (positive definite).

    C_k = I + sum_{j != k} beta_j gamma_j h_j h_j^H
            + diag(Lambda_1[0, 0], ..., Lambda_M[M-1, M-1]).
    """
    C = build_gamma(inst, beta)
    h = inst.channels[k]
    C -= beta[k] * inst.sinr_targets[k] * np.outer(h, h.conj())
    C += np.diag(np.abs(np.diagonal(lambdas)) ** 2).astype(complex)
    return C


def beta_map(inst: ProblemInstance, beta) -> np.ndarray:
    """One application of the dual interference map I(beta).

    Recovers the multipliers at the given beta, then evaluates the
    closed form beta'_k = 1 / (h_k^H C_k^{-1} h_k) with one
    positive-definite solve per user.
    """
    beta = np.asarray(beta, dtype=float)
    lambdas = recover_lambdas(inst, beta)
    base = build_gamma(inst, beta) + np.diag(
        np.abs(np.diagonal(lambdas)) ** 2
    ).astype(complex)
    out = np.empty(inst.K)
    for k in range(inst.K):
        h = inst.channels[k]
        Ck = base - (beta[k] * inst.sinr_targets[k]) * np.outer(h, h.conj())
        x = solve_hermitian_pd(Ck, h, DEFAULT_TOL)
        out[k] = 1.0 / float(np.real(h.conj() @ x))
    return out


def solve_dual(
    inst: ProblemInstance,
    config: FixedPointConfig = DEFAULT_CONFIG,
    trace=None,
):
    """Iterate beta <- I(beta) from zero until convergence.

    Returns (DualSolution, DualIterationState). Raises InfeasibleError
    when the iterates diverge (multiplier exceeding the divergence bound,
    or a long run of non-decreasing increments, or hitting the iteration
    cap while the increments still grow). Raises MaxIterationsError when
    the cap is hit while the residual is still shrinking.

    ``trace``, if given, is called as trace(iteration, beta, residual)
    after every update.
    """
    beta = np.zeros(inst.K)
    prev_inc = np.inf
    stall = 0
    residual = np.inf
    for it in range(1, config.max_iters + 1):
        new = beta_map(inst, beta)
        inc = float(np.max(np.abs(new - beta)))
        residual = inc / max(1.0, float(np.max(np.abs(new))))
        if trace is not None:
            trace(it, new, residual)
        if not np.all(np.isfinite(new)) or np.max(new) > config.divergence_bound:
            raise InfeasibleError(
                f"dual multipliers exceeded {config.divergence_bound:.1e} "
                f"at iteration {it}"
            )
        beta = new
        if residual <= config.tol:
            lambdas = recover_lambdas(inst, beta)
            state = DualIterationState(beta, it, residual, "Converged")
            return DualSolution(beta=beta, lambdas=lambdas, iterations=it), state
        # Divergence watchdog: increments of a convergent monotone
        # iteration eventually decrease; a long non-decreasing run with
        # residual far above tolerance indicates linear blow-up.
        if inc >= prev_inc * (1.0 - 1e-12) and residual > config.tol * 1e3:
            stall += 1
        else:
            stall = 0
        prev_inc = inc
        if stall >= config.stall_window:
            raise InfeasibleError(
                f"dual increments non-decreasing for {stall} iterations "
                f"(residual {residual:.3e}); iterates diverge"
            )
    if stall > 0:
        raise InfeasibleError(
            f"iteration cap {config.max_iters} reached with non-decreasing "
            f"residual {residual:.3e}; iterates diverge"
        )
    raise MaxIterationsError(
        f"dual fixed point did not converge within {config.max_iters} "
        f"iterations (residual {residual:.3e})"
    )
