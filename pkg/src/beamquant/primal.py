"""Primal recovery from a converged dual solution.

Beam directions come out of the dual constraint matrices in closed form:
the direction of user k spans the one-dimensional kernel of
C_k - beta_k h_k h_k^H, which is C_k^{-1} h_k up to normalization. The
remaining unknowns, the power vector p and the quantization covariance Q,
are tied together by the tight SINR equations and the kernel equations
B_m lambda_m = 0 of the fronthaul constraints. Given p, the latter are
solved exactly by a backward sweep that fills Q row by row from the last
relay up; substituting Q(p) into the SINR equations gives the power map
J(p), another standard interference function whose fixed point (reached
from p = 0) completes the optimal solution.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMultiplier,
    NonHermitianResidual,
    NumericalFailure,
    MaxIterationsError,
    OrthogonalBeam,
)
from .dual import DEFAULT_CONFIG, FixedPointConfig, build_c
from .linalg import DEFAULT_TOL, solve_hermitian_pd
from .model import DualSolution, PrimalSolution, ProblemInstance

_DEGENERATE_TOL = 1e-12


@dataclass
class PrimalIterationState:
    """Outcome of the primal fixed-point loop."""

    powers: np.ndarray
    iteration: int
    residual: float
    status: str


def beam_directions(inst: ProblemInstance, dual: DualSolution) -> np.ndarray:
    """Unit beam directions, one per user (rows of a (K, M) array).

    direction_k = normalize(C_k^{-1} h_k), rotated so that h_k^H v_k is
    real and nonnegative (it already is, since C_k is positive definite;
    the rotation guards against rounding).
    """
    out = np.empty((inst.K, inst.M), dtype=complex)
    for k in range(inst.K):
        h = inst.channels[k]
        Ck = build_c(inst, dual.beta, dual.lambdas, k)
        x = solve_hermitian_pd(Ck, h, DEFAULT_TOL)
        norm = float(np.linalg.norm(x))
        if norm <= _DEGENERATE_TOL:
            raise NumericalFailure(f"C_k^-1 h_k vanished for user {k + 1}")
        v = x / norm
        inner = complex(h.conj() @ v)
        if inner != 0:
            v = v * (inner.conjugate() / abs(inner))
        out[k] = v
    return out


def recover_q(
    inst: ProblemInstance, dual: DualSolution, directions: np.ndarray, p
) -> np.ndarray:
    """Quantization covariance solving B_m lambda_m = 0 for every relay.

    Backward sweep m = M..1: with mu = lambda_m restricted to indices
    >= m (leading entry mu1 > 0) and the block Q[m+1:, m+1:] already
    known, the kernel equation fixes column m,

        Q[j, m] = -(sum_{l > m} Q[j, l] * lambda_m[l]) / mu1,  j > m,

    and then the diagonal,

        (eta_m - 1) Q[m, m] = s_m
            - (eta_m / mu1) * sum_{l > m} Q[m, l] * lambda_m[l],

    where s_m = sum_k p_k |direction_{k, m}|^2. At the last relay this
    reduces to Q[M-1, M-1] = s_M / (eta_M - 1).
    """
    p = np.asarray(p, dtype=float)
    M = inst.M
    s = (p[:, None] * np.abs(directions) ** 2).sum(axis=0)
    Q = np.zeros((M, M), dtype=complex)
    for m in range(M - 1, -1, -1):
        lam = dual.lambdas[m]
        mu1 = lam[m].real
        if mu1 <= _DEGENERATE_TOL:
            raise DegenerateMultiplier(
                f"lambda_{m + 1}[{m + 1}] = {mu1:.3e}: row {m + 1} of Q is "
                "underdetermined (fronthaul constraint inactive)"
            )
        if m + 1 < M:
            Q[m + 1 :, m] = -(Q[m + 1 :, m + 1 :] @ lam[m + 1 :]) / mu1
            Q[m, m + 1 :] = Q[m + 1 :, m].conj()
            cross = complex(Q[m, m + 1 :] @ lam[m + 1 :])
        else:
            cross = 0.0 + 0.0j
        diag = (s[m] - inst.eta[m] * cross / mu1) / (inst.eta[m] - 1.0)
        if abs(diag.imag) > 1e-9 * (1.0 + abs(diag.real)):
            raise NonHermitianResidual(
                f"diagonal entry Q[{m + 1}, {m + 1}] has imaginary part "
                f"{diag.imag:.3e}"
            )
        Q[m, m] = diag.real
    return Q


def power_map(
    inst: ProblemInstance, dual: DualSolution, directions: np.ndarray, p
) -> np.ndarray:
    """One application of the primal power map J(p).

    Recovers Q at the given powers, then solves each tight SINR equation
    for the corresponding power:

        p'_k = gamma_k * (sum_{j != k} p_j |h_k^H v_j|^2
                          + h_k^H Q h_k + sigma^2) / |h_k^H v_k|^2.
    """
    p = np.asarray(p, dtype=float)
    Q = recover_q(inst, dual, directions, p)
    gains = np.abs(inst.channels.conj() @ directions.T) ** 2  # gains[k, j]
    own = np.diagonal(gains)
    if np.any(own <= _DEGENERATE_TOL):
        k = int(np.argmin(own))
        raise OrthogonalBeam(f"beam of user {k + 1} is orthogonal to its channel")
    interference = gains @ p - own * p
    qn = np.real(np.einsum("ki,ij,kj->k", inst.channels.conj(), Q, inst.channels))
    return inst.sinr_targets * (interference + qn + inst.sigma2) / own


def solve_primal(
    inst: ProblemInstance,
    dual: DualSolution,
    config: FixedPointConfig = DEFAULT_CONFIG,
    trace=None,
):
    """Iterate p <- J(p) from zero and assemble the primal solution.

    Returns (PrimalSolution, PrimalIterationState). The loop shares the
    convergence criterion of the dual loop (relative sup-norm change).
    """
    directions = beam_directions(inst, dual)
    p = np.zeros(inst.K)
    residual = np.inf
    for it in range(1, config.max_iters + 1):
        new = power_map(inst, dual, directions, p)
        residual = float(np.max(np.abs(new - p))) / max(1.0, float(np.max(new)))
        if trace is not None:
            trace(it, new, residual)
        p = new
        if residual <= config.tol:
            Q = recover_q(inst, dual, directions, p)
            state = PrimalIterationState(p, it, residual, "Converged")
            return PrimalSolution(directions=directions, powers=p, Q=Q), state
    raise MaxIterationsError(
        f"primal fixed point did not converge within {config.max_iters} "
        f"iterations (residual {residual:.3e})"
    )
