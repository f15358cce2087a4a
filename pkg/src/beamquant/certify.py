"""Optimality certification of a (primal, dual) pair.

Checks every condition of the joint optimality system plus the duality
gap and reports one residual and one verdict per condition. A passing
certificate is a self-contained global-optimality proof: the dual-side
conditions establish dual feasibility, the primal-side conditions
establish primal feasibility, and a vanishing gap pins both objectives
to the common optimal value (weak duality sandwiches everything else).
This replaces any comparison against an external SDP solver.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .dual import build_c, build_gamma, dual_slack
from .model import (
    DualSolution,
    PrimalSolution,
    ProblemInstance,
    dual_objective,
    fronthaul_matrix,
    objective,
    sinr,
)


@dataclass(frozen=True)
class CertTolerances:
    """Tolerance ladder of the certifier.

    Two nested fixed points at 1e-10 leave roughly this much slack after
    the dense algebra at full scale (M = 8).
    """

    equality: float = 1e-7  # scaled equality residuals
    psd: float = 1e-8  # scaled PSD slack
    gap: float = 1e-6  # relative duality gap
    rank: float = 1e-7  # eigenvalue window of the rank test


DEFAULT_CERT_TOL = CertTolerances()

CONDITIONS = (
    "d_zero",
    "lambda_structure",
    "dual_psd_and_rank",
    "beta_nonneg",
    "primal_slackness",
    "sinr_equality",
    "bm_psd",
    "bm_slackness",
    "q_psd",
    "duality_gap",
)


@dataclass
class Certificate:
    """Per-condition residuals and verdicts plus the duality gap."""

    residuals: dict
    verdicts: dict
    duality_gap: float
    objective_primal: float
    objective_dual: float
    tolerances: CertTolerances = field(default_factory=CertTolerances)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_json(self) -> str:
        doc = {
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "duality_gap": float(self.duality_gap),
            "objective_primal": float(self.objective_primal),
            "objective_dual": float(self.objective_dual),
            "tolerances": {
                "equality": self.tolerances.equality,
                "psd": self.tolerances.psd,
                "gap": self.tolerances.gap,
                "rank": self.tolerances.rank,
            },
            "passed": self.passed,
        }
        return json.dumps(doc, indent=2)


def gap(inst: ProblemInstance, primal: PrimalSolution, dual: DualSolution) -> float:
    """Signed duality gap: primal objective minus dual objective."""
    return objective(primal) - dual_objective(inst, dual)


def certify(
    inst: ProblemInstance,
    primal: PrimalSolution,
    dual: DualSolution,
    tol: CertTolerances = DEFAULT_CERT_TOL,
) -> Certificate:
    """Evaluate the full optimality system on a candidate pair.

    Failures become verdicts, never exceptions.
    """
    K, M = inst.K, inst.M
    residuals = {}
    verdicts = {}

    # Dual slack matrix vanishes.
    D = dual_slack(inst, dual.beta, dual.lambdas)
    gamma_scale = 1.0 + float(np.max(np.abs(build_gamma(inst, dual.beta))))
    residuals["d_zero"] = float(np.max(np.abs(D)))
    verdicts["d_zero"] = residuals["d_zero"] <= tol.equality * gamma_scale

    # Structured zero prefix and real nonnegative leading entries.
    structure = 0.0
    for m in range(M):
        lam = dual.lambdas[m]
        if m > 0:
            structure = max(structure, float(np.max(np.abs(lam[:m]))))
        structure = max(structure, abs(lam[m].imag), max(0.0, -lam[m].real))
    residuals["lambda_structure"] = structure
    verdicts["lambda_structure"] = structure == 0.0

    # Dual constraint matrices: PSD with a one-dimensional kernel.
    worst_neg = 0.0
    rank_ok = True
    for k in range(K):
        Ck = build_c(inst, dual.beta, dual.lambdas, k)
        A = Ck - dual.beta[k] * np.outer(inst.channels[k], inst.channels[k].conj())
        eigs = np.linalg.eigvalsh(A)
        worst_neg = max(worst_neg, max(0.0, -float(eigs[0])))
        near_zero = int(np.sum(np.abs(eigs) <= tol.rank))
        above = int(np.sum(eigs > tol.rank))
        if near_zero != 1 or above != M - 1:
            rank_ok = False
    residuals["dual_psd_and_rank"] = worst_neg
    verdicts["dual_psd_and_rank"] = rank_ok and worst_neg <= tol.psd

    residuals["beta_nonneg"] = max(0.0, -float(np.min(dual.beta)))
    verdicts["beta_nonneg"] = residuals["beta_nonneg"] == 0.0

    # Complementary slackness of the SINR multipliers:
    # V_k . (C_k - beta_k H_k) = p_k * v_k^H (C_k - beta_k H_k) v_k = 0.
    slack = 0.0
    slack_scale = 1.0 + objective(primal)
    for k in range(K):
        Ck = build_c(inst, dual.beta, dual.lambdas, k)
        A = Ck - dual.beta[k] * np.outer(inst.channels[k], inst.channels[k].conj())
        v = primal.directions[k]
        slack = max(slack, abs(primal.powers[k] * float(np.real(v.conj() @ (A @ v)))))
    residuals["primal_slackness"] = slack
    verdicts["primal_slackness"] = slack <= tol.equality * slack_scale

    # All SINR constraints hold with equality.
    sinr_res = 0.0
    for k in range(K):
        sinr_res = max(
            sinr_res, abs(sinr(inst, primal, k) - inst.sinr_targets[k]) / inst.sinr_targets[k]
        )
    residuals["sinr_equality"] = sinr_res
    verdicts["sinr_equality"] = sinr_res <= tol.equality

    # Fronthaul constraint matrices: PSD, and orthogonal to their
    # multipliers (complementary slackness).
    bm_neg = 0.0
    bm_slack = 0.0
    for m in range(M):
        B = fronthaul_matrix(inst, primal, m)
        b_scale = 1.0 + float(np.max(np.abs(B)))
        eigs = np.linalg.eigvalsh(B)
        bm_neg = max(bm_neg, max(0.0, -float(eigs[0])) / b_scale)
        lam = dual.lambdas[m]
        bm_slack = max(
            bm_slack, abs(float(np.real(lam.conj() @ (B @ lam)))) / b_scale
        )
    residuals["bm_psd"] = bm_neg
    verdicts["bm_psd"] = bm_neg <= tol.psd
    residuals["bm_slackness"] = bm_slack
    verdicts["bm_slackness"] = bm_slack <= tol.equality

    q_neg = max(0.0, -float(np.linalg.eigvalsh(primal.Q)[0])) if M else 0.0
    q_scale = 1.0 + float(np.max(np.abs(primal.Q)))
    residuals["q_psd"] = q_neg / q_scale
    verdicts["q_psd"] = residuals["q_psd"] <= tol.psd

    obj_p = objective(primal)
    obj_d = dual_objective(inst, dual)
    g = obj_p - obj_d
    residuals["duality_gap"] = abs(g)
    verdicts["duality_gap"] = abs(g) <= tol.gap * (1.0 + abs(obj_p))

    return Certificate(
        residuals=residuals,
        verdicts=verdicts,
        duality_gap=g,
        objective_primal=obj_p,
        objective_dual=obj_d,
        tolerances=tol,
    )
