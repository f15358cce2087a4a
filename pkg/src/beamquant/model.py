"""Problem and solution data model plus constraint evaluators.

A problem instance describes the downlink of a hub ("central processor")
feeding M single-antenna relays over rate-limited fronthaul links, which
jointly serve K single-antenna users. The decision variables are one
beamforming vector per user plus the covariance Q of the correlated
quantization noise introduced by compressing the relay signals.

Channel convention: ``channels[k]`` stores the vector h_k whose conjugate
transpose multiplies transmitted signals (received amplitude from beam v
is h_k^H v). This fixes the conjugation convention once, globally.

SINR targets are carried in linear form. The CLI and the sweep harness
accept per-user rate targets r (bits/symbol) and convert them through the
single-stream map gamma = 2**r - 1.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    SchemaError,
    SingularTrailingBlock,
)
from .linalg import (
    DEFAULT_TOL,
    hermitian,
    min_eigenvalue,
    quadratic_form,
    solve_hermitian_pd,
)


def gamma_from_rate(rate):
    """Linear SINR target for a single-stream rate target in bits/symbol."""
    return float(2.0**rate - 1.0)


@dataclass(frozen=True)
class ProblemInstance:
    """Input of the power-minimization problem.

    channels: (K, M) complex array, row k is h_k.
    sinr_targets: K linear SINR targets gamma_k > 0.
    capacities: M fronthaul capacities C_m > 0 in bits/symbol.
    sigma2: receiver noise power (linear).
    """

    channels: np.ndarray
    sinr_targets: np.ndarray
    capacities: np.ndarray
    sigma2: float

    def __post_init__(self):
        channels = np.array(self.channels, dtype=complex)
        gammas = np.array(self.sinr_targets, dtype=float)
        caps = np.array(self.capacities, dtype=float)
        if channels.ndim != 2:
            raise DimensionMismatch("channels must be a K x M array")
        K, M = channels.shape
        if K < 1 or M < 1:
            raise ValueError("need at least one user and one relay")
        if gammas.shape != (K,):
            raise DimensionMismatch("sinr_targets must have length K")
        if caps.shape != (M,):
            raise DimensionMismatch("capacities must have length M")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not np.all(gammas > 0):
            raise ValueError("all SINR targets must be positive")
        if not np.all(caps > 0):
            raise ValueError("all fronthaul capacities must be positive")
        if np.any(np.all(channels == 0, axis=1)):
            raise ValueError("channel vectors must not be identically zero")
        channels.setflags(write=False)
        gammas.setflags(write=False)
        caps.setflags(write=False)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "sinr_targets", gammas)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def K(self) -> int:
        return self.channels.shape[0]

    @property
    def M(self) -> int:
        return self.channels.shape[1]

    @property
    def eta(self) -> np.ndarray:
        """Per-relay fronthaul factors 2**C_m (> 1)."""
        return 2.0**self.capacities

    def channel_outer(self, k) -> np.ndarray:
        """Rank-one channel matrix h_k h_k^H."""
        h = self.channels[k]
        return np.outer(h, h.conj())


@dataclass(frozen=True)
class PrimalSolution:
    """Beamforming directions (unit rows), per-user powers, and Q."""

    directions: np.ndarray  # (K, M) complex, unit norm rows
    powers: np.ndarray  # (K,) nonnegative
    Q: np.ndarray  # (M, M) Hermitian PSD

    def __post_init__(self):
        directions = np.array(self.directions, dtype=complex)
        powers = np.array(self.powers, dtype=float)
        Q = hermitian(self.Q)
        if directions.ndim != 2:
            raise DimensionMismatch("directions must be a K x M array")
        K, M = directions.shape
        if powers.shape != (K,):
            raise DimensionMismatch("powers must have length K")
        if Q.shape != (M, M):
            raise DimensionMismatch("Q must be M x M")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("beam directions must be unit vectors (within 1e-12)")
        if np.any(powers < 0):
            raise ValueError("powers must be nonnegative")
        scale = 1.0 + (float(np.max(np.abs(Q))) if Q.size else 0.0)
        if min_eigenvalue(Q) < -DEFAULT_TOL.psd_slack * scale:
            raise ValueError("Q must be positive semidefinite (within slack)")
        directions.setflags(write=False)
        powers.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "Q", Q)

    def beamformer(self, k) -> np.ndarray:
        """Full beamforming vector v_k = sqrt(p_k) * direction_k."""
        return np.sqrt(self.powers[k]) * self.directions[k]


@dataclass(frozen=True)
class DualSolution:
    """Multipliers of the dual problem.

    beta: K nonnegative multipliers of the SINR constraints.
    lambdas: (M, M) complex array; row m is the structured vector
        lambda_m with lambda_m[i] = 0 for i < m and lambda_m[m] real >= 0,
        so that Lambda_m = outer(lambda_m, conj(lambda_m)) is the rank-one
        multiplier of fronthaul constraint m.
    """

    beta: np.ndarray
    lambdas: np.ndarray
    iterations: int = 0

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        lambdas = np.array(self.lambdas, dtype=complex)
        if np.any(beta < 0):
            raise ValueError("beta multipliers must be nonnegative")
        M = lambdas.shape[0]
        if lambdas.shape != (M, M):
            raise DimensionMismatch("lambdas must be an M x M array of row vectors")
        for m in range(M):
            if np.any(lambdas[m, :m] != 0):
                raise ValueError(f"lambda_{m + 1} must have an exact zero prefix")
            if lambdas[m, m].imag != 0 or lambdas[m, m].real < 0:
                raise ValueError(f"lambda_{m + 1}[{m + 1}] must be real nonnegative")
        beta.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lambdas", lambdas)

    def big_lambda(self, m) -> np.ndarray:
        """Rank-one multiplier matrix Lambda_m."""
        lam = self.lambdas[m]
        return np.outer(lam, lam.conj())


# ---------------------------------------------------------------------------
# Constraint evaluators
# ---------------------------------------------------------------------------


def sinr(inst: ProblemInstance, sol: PrimalSolution, k: int) -> float:
    """SINR of user k under the given solution."""
    if sol.directions.shape != inst.channels.shape:
        raise DimensionMismatch("solution dimensions do not match the instance")
    if not 0 <= k < inst.K:
        raise DimensionMismatch(f"user index {k} out of range")
    h = inst.channels[k]
    gains = np.abs(sol.directions.conj() @ h) ** 2 * sol.powers  # |h_k^H v_j|^2
    interference = float(np.sum(gains) - gains[k])
    qn = quadratic_form(sol.Q, h)
    return float(gains[k] / (interference + qn + inst.sigma2))


def schur_complement(Q: np.ndarray, m: int, tol=DEFAULT_TOL) -> float:
    """Effective quantization-noise power at relay m (0-based).

    Q[m, m] - Q[m, m+1:] @ inv(Q[m+1:, m+1:]) @ Q[m+1:, m]; for the last
    relay the trailing block is empty and the value is Q[M-1, M-1].
    """
    M = Q.shape[0]
    scale = 1.0 + float(np.max(np.abs(Q))) if Q.size else 1.0
    floor = tol.psd_slack * scale
    if m == M - 1:
        val = Q[m, m].real
    else:
        trailing = Q[m + 1 :, m + 1 :]
        col = Q[m + 1 :, m]
        try:
            x = solve_hermitian_pd(trailing, col, tol)
        except Exception as exc:
            raise SingularTrailingBlock(
                f"trailing block after relay {m + 1} is not positive definite"
            ) from exc
        val = Q[m, m].real - float(np.real(col.conj() @ x))
    if val <= floor:
        raise SingularTrailingBlock(
            f"Schur complement {val:.3e} at relay {m + 1} is at the PSD boundary"
        )
    return float(val)


def fronthaul_rate(inst: ProblemInstance, sol: PrimalSolution, m: int) -> float:
    """Compression rate (bits/symbol) of the fronthaul link to relay m."""
    if not 0 <= m < inst.M:
        raise DimensionMismatch(f"relay index {m} out of range")
    signal = float(np.sum(sol.powers * np.abs(sol.directions[:, m]) ** 2))
    num = signal + sol.Q[m, m].real
    den = schur_complement(sol.Q, m)
    return float(np.log2(num / den))


def objective(sol: PrimalSolution) -> float:
    """Total transmit power: sum of beam powers plus trace of Q."""
    return float(np.sum(sol.powers) + np.trace(sol.Q).real)


def dual_objective(inst: ProblemInstance, dual: DualSolution) -> float:
    """Dual objective: sum_k gamma_k * sigma^2 * beta_k."""
    return float(np.sum(inst.sinr_targets * inst.sigma2 * dual.beta))


def fronthaul_matrix(inst: ProblemInstance, sol: PrimalSolution, m: int) -> np.ndarray:
    """PSD-form fronthaul constraint matrix B_m (0-based relay index).

    B_m = eta_m * [Q block on indices m..M-1, zero elsewhere]
          - (sum_k V_k[m, m] + Q[m, m]) * E_m.
    B_m >= 0 is equivalent to the rate constraint at relay m.
    """
    M = inst.M
    B = np.zeros((M, M), dtype=complex)
    B[m:, m:] = inst.eta[m] * sol.Q[m:, m:]
    signal = float(np.sum(sol.powers * np.abs(sol.directions[:, m]) ** 2))
    B[m, m] -= signal + sol.Q[m, m].real
    return B


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _require(doc, key, kind, path=""):
    if key not in doc:
        raise SchemaError(f"missing field '{path}{key}'", field=path + key)
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind):
        raise SchemaError(
            f"field '{path}{key}' must be {kind.__name__}", field=path + key
        )
    return val


def _complex_pairs(rows, field_name, expect_cols):
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != expect_cols:
            raise SchemaError(
                f"field '{field_name}[{i}]' must be a list of {expect_cols} [re, im] pairs",
                field=f"{field_name}[{i}]",
            )
        vals = []
        for j, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) for x in pair)
            ):
                raise SchemaError(
                    f"field '{field_name}[{i}][{j}]' must be an [re, im] pair",
                    field=f"{field_name}[{i}][{j}]",
                )
            vals.append(complex(pair[0], pair[1]))
        out.append(vals)
    return np.array(out, dtype=complex)


def _pairs_of(matrix) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix, dtype=complex)]


def parse_instance(data) -> ProblemInstance:
    """Parse an instance JSON document (bytes, str, or dict)."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = data
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    M = _require(doc, "M", int)
    K = _require(doc, "K", int)
    sigma2 = _require(doc, "sigma2", float)
    caps = _require(doc, "capacities", list)
    if len(caps) != M:
        raise SchemaError("field 'capacities' must have length M", field="capacities")
    has_rate = "rate_targets" in doc
    has_sinr = "sinr_targets" in doc
    if has_rate == has_sinr:
        raise SchemaError(
            "exactly one of 'rate_targets' and 'sinr_targets' is required",
            field="rate_targets|sinr_targets",
        )
    targets = doc["rate_targets"] if has_rate else doc["sinr_targets"]
    if not isinstance(targets, list) or len(targets) != K:
        key = "rate_targets" if has_rate else "sinr_targets"
        raise SchemaError(f"field '{key}' must be a list of length K", field=key)
    gammas = [gamma_from_rate(r) for r in targets] if has_rate else [float(g) for g in targets]
    channels_doc = _require(doc, "channels", list)
    if len(channels_doc) != K:
        raise SchemaError("field 'channels' must have K rows", field="channels")
    channels = _complex_pairs(channels_doc, "channels", M)
    try:
        return ProblemInstance(
            channels=channels,
            sinr_targets=np.array(gammas, dtype=float),
            capacities=np.array(caps, dtype=float),
            sigma2=sigma2,
        )
    except (ValueError, DimensionMismatch) as exc:
        raise SchemaError(str(exc)) from exc


def serialize_instance(inst: ProblemInstance) -> str:
    """Serialize an instance to JSON; parse(serialize(x)) == x bit-exactly."""
    doc = {
        "M": inst.M,
        "K": inst.K,
        "sigma2": inst.sigma2,
        "capacities": [float(c) for c in inst.capacities],
        "sinr_targets": [float(g) for g in inst.sinr_targets],
        "channels": _pairs_of(inst.channels),
    }
    return json.dumps(doc, indent=2)


def parse_solution(data) -> PrimalSolution:
    """Parse a solution JSON document."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = data
    if not isinstance(doc, dict):
        raise SchemaError("solution document must be a JSON object")
    dirs_doc = _require(doc, "directions", list)
    powers = _require(doc, "powers", list)
    q_doc = _require(doc, "Q", list)
    M = len(q_doc)
    directions = _complex_pairs(dirs_doc, "directions", M)
    Q = _complex_pairs(q_doc, "Q", M)
    try:
        return PrimalSolution(
            directions=directions,
            powers=np.array([float(p) for p in powers], dtype=float),
            Q=Q,
        )
    except (ValueError, DimensionMismatch) as exc:
        raise SchemaError(str(exc)) from exc


def serialize_solution(sol: PrimalSolution) -> str:
    doc = {
        "directions": _pairs_of(sol.directions),
        "powers": [float(p) for p in sol.powers],
        "Q": _pairs_of(sol.Q),
    }
    return json.dumps(doc, indent=2)


def parse_dual(data) -> DualSolution:
    """Parse a dual-solution JSON document."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = data
    if not isinstance(doc, dict):
        raise SchemaError("dual document must be a JSON object")
    beta = _require(doc, "beta", list)
    lam_doc = _require(doc, "lambdas", list)
    M = len(lam_doc)
    lambdas = _complex_pairs(lam_doc, "lambdas", M)
    try:
        return DualSolution(
            beta=np.array([float(b) for b in beta], dtype=float), lambdas=lambdas
        )
    except (ValueError, DimensionMismatch) as exc:
        raise SchemaError(str(exc)) from exc


def serialize_dual(dual: DualSolution) -> str:
    doc = {
        "beta": [float(b) for b in dual.beta],
        "lambdas": _pairs_of(dual.lambdas),
    }
    return json.dumps(doc, indent=2)
