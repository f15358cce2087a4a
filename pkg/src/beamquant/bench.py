"""Instance generation, brute-force oracles, and the Monte-Carlo sweep.

Random channels follow i.i.d. unit-variance complex Gaussian fading
(real and imaginary parts independent Normal(0, 1/2)). Reproducibility:
the channel draw of (rate index ri, run r) uses a Philox counter-based
generator keyed by ``numpy.random.SeedSequence((seed, ri, r))``, so the
sweep output is a pure function of its configuration and runs can be
executed in any order or in parallel without changing the records.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .certify import CertTolerances, certify
from .dual import FixedPointConfig
from .errors import (
    BeamquantError,
    InfeasibleError,
    InfeasibleOnGrid,
    SchemaError,
)
from .model import ProblemInstance, gamma_from_rate
from .solver import solve


def instance_rng(seed: int, rate_index: int, run_index: int) -> np.random.Generator:
    """Deterministic per-(rate, run) random stream (Philox, counter-based)."""
    ss = np.random.SeedSequence((int(seed), int(rate_index), int(run_index)))
    return np.random.Generator(np.random.Philox(ss))


def gen_instance(
    M: int,
    K: int,
    capacity: float,
    sigma2: float,
    rng: np.random.Generator,
    sinr_targets=None,
) -> ProblemInstance:
    """Draw a Rayleigh-fading instance with uniform fronthaul capacity.

    Each channel coefficient has independent Normal(0, 1/2) real and
    imaginary parts (unit-variance complex Gaussian). ``sinr_targets``
    defaults to 1.0 for every user.
    """
    parts = rng.normal(0.0, np.sqrt(0.5), size=(K, M, 2))
    channels = parts[..., 0] + 1j * parts[..., 1]
    if sinr_targets is None:
        sinr_targets = np.ones(K)
    return ProblemInstance(
        channels=channels,
        sinr_targets=np.asarray(sinr_targets, dtype=float),
        capacities=np.full(M, float(capacity)),
        sigma2=float(sigma2),
    )


# ---------------------------------------------------------------------------
# Brute-force oracles (desk-scale independent verification)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleBracket:
    """Lower/upper bracket on the optimal objective value."""

    lower: float
    upper: float

    def relative_distance(self, value: float) -> float:
        ref = max(1.0, abs(value))
        return max(0.0, self.lower - value, value - self.upper) / ref


def _oracle_single_relay(inst: ProblemInstance) -> OracleBracket:
    """M = 1 oracle: everything collapses to scalars.

    For fixed quantization power q, the tight SINR equations are linear
    in the powers, p(q) = a + b q; the objective sum(p) + q is affine
    increasing in q; the fronthaul constraint sum(p) <= (eta - 1) q is
    affine. Grid over q (log-spaced, refined twice around the
    feasibility boundary) brackets the optimum.
    """
    K = inst.K
    g = np.abs(inst.channels[:, 0]) ** 2
    gam = inst.sinr_targets
    eta = float(inst.eta[0])
    e = inst.sigma2 / g
    A = np.eye(K)
    for k in range(K):
        A[k, [j for j in range(K) if j != k]] = -gam[k]
    if np.linalg.det(A) <= 0:
        raise InfeasibleOnGrid("SINR targets are jointly unattainable (det <= 0)")
    a = np.linalg.solve(A, gam * e)
    b = np.linalg.solve(A, gam)
    if np.any(a < 0) or np.any(b < 0):
        raise InfeasibleOnGrid("SINR system has no nonnegative power solution")

    def margin(q):
        # feasibility margin of the fronthaul constraint, affine in q
        return (eta - 1.0) * q - float(np.sum(a)) - float(np.sum(b)) * q

    def obj(q):
        return float(np.sum(a)) + (float(np.sum(b)) + 1.0) * q

    scale = max(float(np.sum(a)), inst.sigma2, 1e-12)
    qs = np.geomspace(scale * 1e-9, scale * 1e9, 400)
    feas = margin(qs) >= 0
    if not np.any(feas):
        raise InfeasibleOnGrid("no feasible quantization power on the grid")
    lo_idx = int(np.argmax(feas))
    q_hi = qs[lo_idx]
    q_lo = qs[lo_idx - 1] if lo_idx > 0 else q_hi * 1e-3
    for _ in range(2):  # linear refinements around the boundary
        qs = np.linspace(q_lo, q_hi, 400)
        feas = margin(qs) >= 0
        idx = int(np.argmax(feas))
        q_hi = qs[idx]
        q_lo = qs[idx - 1] if idx > 0 else q_lo
    return OracleBracket(lower=obj(q_lo), upper=obj(q_hi))


def _two_relay_objective(inst: ProblemInstance, theta, phi, q22, rho):
    """Objective of the reduced M = 2, K = 1 parameterization (vectorized).

    Free parameters (broadcastable arrays): beam angle/phase
    (theta, phi), trailing quantization power q22, and the correlation
    magnitude s = rho * q22 of the off-diagonal Q entry (its phase is
    chosen to cancel interference, which is optimal because the phase
    enters no other constraint). The SINR and leading fronthaul
    constraints are imposed with equality, which determines (p, q11) as
    the componentwise-minimal solution of two affine inequalities.
    Infeasible points evaluate to +inf.
    """
    h1, h2 = inst.channels[0]
    gam = float(inst.sinr_targets[0])
    eta1, eta2 = inst.eta
    sigma2 = inst.sigma2
    v1 = np.cos(theta)
    v2 = np.sin(theta) * np.exp(1j * phi)
    amp = np.abs(h1.conjugate() * v1 + h2.conjugate() * v2) ** 2
    s = rho * q22
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = gam * abs(h1) ** 2 / amp
        c0 = gam * (abs(h2) ** 2 * q22 - 2.0 * s * abs(h1) * abs(h2) + sigma2) / amp
        d1 = v1**2 / (eta1 - 1.0)
        d0 = np.where(q22 > 0, eta1 * s**2 / (np.maximum(q22, 1e-300) * (eta1 - 1.0)), 0.0)
        denom = 1.0 - c1 * d1
        p = (c1 * d0 + c0) / denom
        clamped = p < 0
        p = np.where(clamped, 0.0, p)
        q11 = np.where(clamped, d0, d1 * p + d0)
        bad = (amp < 1e-14) | (denom <= 1e-14)
        bad = bad | ((q22 <= 0) & (s > 0))
        bad = bad | (clamped & (c1 * q11 + c0 > 0))
        # constraint slack ~1e-9: optima sit exactly on these boundaries
        bad = bad | ((eta2 - 1.0) * q22 < p * np.abs(v2) ** 2 - 1e-9 * (1.0 + p))
        bad = bad | (s**2 > q11 * q22 * (1.0 + 1e-9) + 1e-300)
        obj = p + q11 + q22
    return np.where(bad, np.inf, obj)


def _refined_axis(arr, idx, points):
    lo = arr[max(idx - 1, 0)]
    hi = arr[min(idx + 1, len(arr) - 1)]
    if hi <= lo:
        hi = lo + max(abs(lo), 1e-9) * 1e-6
    return np.linspace(lo, hi, points)


def _oracle_two_relays(inst: ProblemInstance) -> OracleBracket:
    """M = 2, K = 1 oracle: grid over the reduced parameterization with
    shrinking-window refinement, then a local polish."""
    scale = max(inst.sigma2 * float(np.max(inst.sinr_targets)), 1e-9)
    thetas = np.linspace(0.0, np.pi / 2, 21)
    phis = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
    q22s = np.geomspace(scale * 1e-8, scale * 1e5, 32)
    rhos = np.concatenate([[0.0], np.geomspace(1e-4, 1e3, 22)])

    best_val = np.inf
    best_x = None
    for _ in range(4):
        vals = _two_relay_objective(
            inst,
            thetas[:, None, None, None],
            phis[None, :, None, None],
            q22s[None, None, :, None],
            rhos[None, None, None, :],
        )
        flat = int(np.argmin(vals))
        it, ip, iq, ir = np.unravel_index(flat, vals.shape)
        val = float(vals[it, ip, iq, ir])
        if np.isfinite(val) and val < best_val:
            best_val = val
            best_x = (thetas[it], phis[ip], q22s[iq], rhos[ir])
        if best_x is None:
            raise InfeasibleOnGrid("no feasible point on the oracle grid")
        thetas = _refined_axis(thetas, it, 9)
        phis = _refined_axis(phis, ip, 9)
        q22s = _refined_axis(q22s, iq, 9)
        rhos = _refined_axis(rhos, ir, 9)

    best_val = _polish_two_relays(inst, best_x, best_val)
    return OracleBracket(lower=best_val * (1.0 - 1e-4), upper=best_val)


def _two_relay_tight_objective(inst, theta, phi, rho) -> float:
    """B2-tight branch of the reduced M = 2, K = 1 problem.

    With the trailing fronthaul constraint also imposed with equality,
    (p, q11, q22) solve a 3x3 linear system given (theta, phi, rho),
    leaving a smooth unconstrained objective of three variables around
    a generic optimum.
    """
    h1, h2 = inst.channels[0]
    gam = float(inst.sinr_targets[0])
    eta1, eta2 = inst.eta
    v1 = np.cos(theta)
    v2 = np.sin(theta) * np.exp(1j * phi)
    amp = abs(h1.conjugate() * v1 + h2.conjugate() * v2) ** 2
    if amp < 1e-14 or rho < 0:
        return np.inf
    A = np.array(
        [
            [1.0, -gam * abs(h1) ** 2 / amp,
             -gam * (abs(h2) ** 2 - 2.0 * rho * abs(h1) * abs(h2)) / amp],
            [-v1**2 / (eta1 - 1.0), 1.0, -eta1 * rho**2 / (eta1 - 1.0)],
            [-abs(v2) ** 2 / (eta2 - 1.0), 0.0, 1.0],
        ]
    )
    rhs = np.array([gam * inst.sigma2 / amp, 0.0, 0.0])
    try:
        p, q11, q22 = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return np.inf
    if p < 0 or q11 < 0 or q22 < 0:
        return np.inf
    if (rho * q22) ** 2 > q11 * q22 * (1.0 + 1e-9) + 1e-300:
        return np.inf
    return float(p + q11 + q22)


def _polish_two_relays(inst, x0, fallback) -> float:
    """Local derivative-free refinement of the grid optimum.

    Polishes both the generic 4-variable parameterization and the
    B2-tight 3-variable branch, keeping the best finite value.
    """
    best = float(fallback)

    def f4(x):
        v = _two_relay_objective(inst, x[0], x[1], np.exp(x[2]), max(x[3], 0.0))
        return float(v) if np.isfinite(v) else fallback * 10.0

    def f3(x):
        v = _two_relay_tight_objective(inst, x[0], x[1], max(x[2], 0.0))
        return v if np.isfinite(v) else fallback * 10.0

    start4 = np.array([x0[0], x0[1], np.log(max(x0[2], 1e-12)), x0[3]])
    start3 = np.array([x0[0], x0[1], x0[3]])
    for f, start in ((f4, start4), (f3, start3)):
        try:
            res = scipy.optimize.minimize(
                f,
                start,
                method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 6000},
            )
            if np.isfinite(res.fun) and res.fun < best:
                best = float(res.fun)
        except Exception:
            pass
    return best


def brute_force_oracle(inst: ProblemInstance) -> OracleBracket:
    """Independent bracket on the optimal objective for tiny instances.

    Supports M = 1 with K <= 2, and M = 2 with K = 1. Raises
    InfeasibleOnGrid when no feasible point exists on the search grid.
    """
    if inst.M == 1 and inst.K <= 2:
        return _oracle_single_relay(inst)
    if inst.M == 2 and inst.K == 1:
        return _oracle_two_relays(inst)
    raise ValueError(
        f"oracle supports (M=1, K<=2) and (M=2, K=1); got M={inst.M}, K={inst.K}"
    )


# ---------------------------------------------------------------------------
# Monte-Carlo sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of the rate-target sweep."""

    M: int
    K: int
    capacity: float
    sigma2: float
    rate_targets: tuple
    runs: int
    seed: int
    tol: float = 1e-10
    max_iters: int = 10_000

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.rate_targets or any(r <= 0 for r in self.rate_targets):
            raise ValueError("rate_targets must be nonempty and positive")
        object.__setattr__(self, "rate_targets", tuple(float(r) for r in self.rate_targets))


@dataclass
class RunRecord:
    """Per-instance outcome of the sweep."""

    rate_target: float
    run_index: int
    status: str  # "Solved" | "Infeasible" | "Failed"
    objective: float | None
    dual_objective: float | None
    gap: float | None
    dual_iterations: int | None
    primal_iterations: int | None
    wall_time_ms: float


def parse_sweep_config(data) -> SweepConfig:
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = data
    try:
        return SweepConfig(
            M=int(doc["M"]),
            K=int(doc["K"]),
            capacity=float(doc["capacity"]),
            sigma2=float(doc["sigma2"]),
            rate_targets=tuple(float(r) for r in doc["rate_targets"]),
            runs=int(doc["runs"]),
            seed=int(doc["seed"]),
            tol=float(doc.get("tol", 1e-10)),
            max_iters=int(doc.get("max_iters", 10_000)),
        )
    except KeyError as exc:
        raise SchemaError(f"missing field '{exc.args[0]}'", field=exc.args[0]) from exc


def _run_one(cfg: SweepConfig, rate_index: int, run_index: int) -> RunRecord:
    rate = cfg.rate_targets[rate_index]
    rng = instance_rng(cfg.seed, rate_index, run_index)
    gamma = gamma_from_rate(rate)
    inst = gen_instance(
        cfg.M, cfg.K, cfg.capacity, cfg.sigma2, rng,
        sinr_targets=np.full(cfg.K, gamma),
    )
    fp = FixedPointConfig(tol=cfg.tol, max_iters=cfg.max_iters)
    start = time.perf_counter()
    try:
        result = solve(inst, fp)
        cert = certify(inst, result.primal, result.dual)
        elapsed = (time.perf_counter() - start) * 1e3
        status = "Solved" if cert.passed else "Failed"
        return RunRecord(
            rate_target=rate,
            run_index=run_index,
            status=status,
            objective=cert.objective_primal,
            dual_objective=cert.objective_dual,
            gap=cert.duality_gap,
            dual_iterations=result.dual_state.iteration,
            primal_iterations=result.primal_state.iteration,
            wall_time_ms=elapsed,
        )
    except InfeasibleError:
        elapsed = (time.perf_counter() - start) * 1e3
        return RunRecord(rate, run_index, "Infeasible", None, None, None, None, None, elapsed)
    except BeamquantError:
        elapsed = (time.perf_counter() - start) * 1e3
        return RunRecord(rate, run_index, "Failed", None, None, None, None, None, elapsed)


def _run_one_star(args):
    return _run_one(*args)


def run_sweep(cfg: SweepConfig, workers: int = 1):
    """Run the full sweep; returns (records, aggregates).

    Records are ordered by (rate index, run index) regardless of
    execution order. A record is Solved only when its optimality
    certificate passes; certificate failures are recorded as Failed.
    Infeasible draws are counted and excluded from the means.
    """
    tasks = [
        (cfg, ri, r)
        for ri in range(len(cfg.rate_targets))
        for r in range(cfg.runs)
    ]
    # pool.map preserves task order, so records come back sorted by
    # (rate index, run index) regardless of execution interleaving.
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one_star, tasks, chunksize=8))
    else:
        records = [_run_one_star(t) for t in tasks]

    aggregates = []
    for rate in cfg.rate_targets:
        rows = [r for r in records if r.rate_target == rate]
        solved = [r for r in rows if r.status == "Solved"]
        aggregates.append(
            {
                "rate_target": rate,
                "runs": len(rows),
                "solved": len(solved),
                "infeasible": sum(1 for r in rows if r.status == "Infeasible"),
                "failed": sum(1 for r in rows if r.status == "Failed"),
                "mean_objective": (
                    float(np.mean([r.objective for r in solved])) if solved else None
                ),
                "mean_wall_time_ms": (
                    float(np.mean([r.wall_time_ms for r in rows])) if rows else None
                ),
            }
        )
    return records, aggregates


CSV_HEADER = (
    "rate_target,run,status,objective,dual_objective,gap,"
    "dual_iters,primal_iters,wall_time_ms"
)


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    r.rate_target,
                    r.run_index,
                    r.status,
                    r.objective,
                    r.dual_objective,
                    r.gap,
                    r.dual_iterations,
                    r.primal_iterations,
                    r.wall_time_ms,
                )
            )
        )
    return "\n".join(lines) + "\n"


def sweep_to_json(cfg: SweepConfig, records, aggregates) -> str:
    doc = {
        "config": {
            "M": cfg.M,
            "K": cfg.K,
            "capacity": cfg.capacity,
            "sigma2": cfg.sigma2,
            "rate_targets": list(cfg.rate_targets),
            "runs": cfg.runs,
            "seed": cfg.seed,
            "tol": cfg.tol,
            "max_iters": cfg.max_iters,
        },
        "records": [
            {
                "rate_target": r.rate_target,
                "run": r.run_index,
                "status": r.status,
                "objective": r.objective,
                "dual_objective": r.dual_objective,
                "gap": r.gap,
                "dual_iterations": r.dual_iterations,
                "primal_iterations": r.primal_iterations,
                "wall_time_ms": r.wall_time_ms,
            }
            for r in records
        ],
        "aggregates": aggregates,
    }
    return json.dumps(doc, indent=2)
