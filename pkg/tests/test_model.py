import json

import numpy as np
import pytest

from beamquant.errors import SchemaError, SingularTrailingBlock
from beamquant.model import (
    PrimalSolution,
    ProblemInstance,
    fronthaul_rate,
    gamma_from_rate,
    objective,
    parse_instance,
    parse_solution,
    serialize_instance,
    serialize_solution,
    sinr,
)


def scalar_instance(gamma=1.0, capacity=2.0, sigma2=1.0):
    return ProblemInstance(
        channels=[[1.0]], sinr_targets=[gamma], capacities=[capacity], sigma2=sigma2
    )


def scalar_solution(p, q):
    return PrimalSolution(directions=[[1.0]], powers=[p], Q=[[q]])


def random_instance(rng, M, K, capacity=3.0):
    ch = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    return ProblemInstance(
        channels=ch,
        sinr_targets=rng.uniform(0.3, 1.5, K),
        capacities=np.full(M, capacity),
        sigma2=1.0,
    )


def random_solution(rng, M, K):
    d = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    a = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
    return PrimalSolution(
        directions=d, powers=rng.uniform(0.1, 2.0, K), Q=a @ a.conj().T + 0.1 * np.eye(M)
    )


class TestSinr:
    def test_analytic_closed_loop(self):
        # p = 3/2, q = 1/2: SINR = 1.5 / (0.5 + 1.0) = 1
        inst = scalar_instance()
        sol = scalar_solution(1.5, 0.5)
        assert sinr(inst, sol, 0) == pytest.approx(1.0)

    def test_zero_power(self):
        assert sinr(scalar_instance(), scalar_solution(0.0, 0.5), 0) == 0.0

    def test_single_user_matched_beam(self):
        rng = np.random.default_rng(0)
        h = rng.normal(size=3) + 1j * rng.normal(size=3)
        gamma = 0.7
        inst = ProblemInstance(
            channels=[h], sinr_targets=[gamma], capacities=[3.0, 3.0, 3.0], sigma2=2.0
        )
        p = gamma * inst.sigma2 / np.linalg.norm(h) ** 2
        sol = PrimalSolution(
            directions=[h / np.linalg.norm(h)], powers=[p], Q=np.zeros((3, 3))
        )
        assert sinr(inst, sol, 0) == pytest.approx(gamma)

    def test_scale_invariance(self):
        # scaling powers, Q, and sigma2 jointly leaves every SINR unchanged
        rng = np.random.default_rng(1)
        inst = random_instance(rng, 3, 2)
        sol = random_solution(rng, 3, 2)
        t = 3.7
        inst2 = ProblemInstance(
            channels=inst.channels,
            sinr_targets=inst.sinr_targets,
            capacities=inst.capacities,
            sigma2=inst.sigma2 * t,
        )
        sol2 = PrimalSolution(directions=sol.directions, powers=sol.powers * t, Q=sol.Q * t)
        for k in range(2):
            assert sinr(inst2, sol2, k) == pytest.approx(sinr(inst, sol, k), rel=1e-12)


class TestFronthaulRate:
    def test_analytic_closed_loop(self):
        inst = scalar_instance()
        sol = scalar_solution(1.5, 0.5)
        assert fronthaul_rate(inst, sol, 0) == pytest.approx(2.0)

    def test_diagonal_q_single_user(self):
        rng = np.random.default_rng(2)
        M = 3
        q = rng.uniform(0.2, 1.0, M)
        d = rng.normal(size=M) + 1j * rng.normal(size=M)
        d /= np.linalg.norm(d)
        p = 1.3
        inst = ProblemInstance(
            channels=[np.ones(M)], sinr_targets=[1.0], capacities=np.full(M, 3.0), sigma2=1.0
        )
        sol = PrimalSolution(directions=[d], powers=[p], Q=np.diag(q))
        for m in range(M):
            expected = np.log2((p * abs(d[m]) ** 2 + q[m]) / q[m])
            assert fronthaul_rate(inst, sol, m) == pytest.approx(expected)

    def test_zero_beams(self):
        inst = ProblemInstance(
            channels=[[1.0, 1.0]], sinr_targets=[1.0], capacities=[2.0, 2.0], sigma2=1.0
        )
        sol = PrimalSolution(directions=[[1.0, 0.0]], powers=[0.0], Q=np.eye(2))
        assert fronthaul_rate(inst, sol, 0) == pytest.approx(0.0)
        assert fronthaul_rate(inst, sol, 1) == pytest.approx(0.0)

    def test_singular_trailing_block(self):
        inst = ProblemInstance(
            channels=[[1.0, 1.0]], sinr_targets=[1.0], capacities=[2.0, 2.0], sigma2=1.0
        )
        sol = PrimalSolution(directions=[[1.0, 0.0]], powers=[1.0], Q=np.zeros((2, 2)))
        with pytest.raises(SingularTrailingBlock):
            fronthaul_rate(inst, sol, 1)

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        sol = random_solution(rng, 3, 2)
        inst = random_instance(rng, 3, 2)
        t = 0.42
        sol2 = PrimalSolution(directions=sol.directions, powers=sol.powers * t, Q=sol.Q * t)
        for m in range(3):
            assert fronthaul_rate(inst, sol2, m) == pytest.approx(
                fronthaul_rate(inst, sol, m), rel=1e-10
            )


class TestObjective:
    def test_zero(self):
        assert objective(scalar_solution(0.0, 0.0)) == 0.0

    def test_analytic(self):
        assert objective(scalar_solution(1.5, 0.5)) == pytest.approx(2.0)

    def test_two_relays(self):
        sol = PrimalSolution(
            directions=np.eye(2), powers=[1.0, 1.0], Q=np.eye(2)
        )
        assert objective(sol) == pytest.approx(4.0)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        sol = random_solution(rng, 3, 2)
        t = 2.5
        sol2 = PrimalSolution(directions=sol.directions, powers=sol.powers * t, Q=sol.Q * t)
        assert objective(sol2) == pytest.approx(t * objective(sol), rel=1e-12)


class TestSerialization:
    def test_minimal_rate_target(self):
        doc = {
            "M": 1,
            "K": 1,
            "sigma2": 1.0,
            "capacities": [2.0],
            "rate_targets": [2.0],
            "channels": [[[1.0, 0.0]]],
        }
        inst = parse_instance(json.dumps(doc))
        assert inst.eta[0] == pytest.approx(4.0)
        assert inst.sinr_targets[0] == pytest.approx(gamma_from_rate(2.0))

    def test_missing_sigma2(self):
        doc = {"M": 1, "K": 1, "capacities": [2.0], "sinr_targets": [1.0], "channels": [[[1.0, 0.0]]]}
        with pytest.raises(SchemaError) as exc:
            parse_instance(json.dumps(doc))
        assert "sigma2" in str(exc.value)

    def test_both_target_kinds_rejected(self):
        doc = {
            "M": 1, "K": 1, "sigma2": 1.0, "capacities": [2.0],
            "rate_targets": [1.0], "sinr_targets": [1.0],
            "channels": [[[1.0, 0.0]]],
        }
        with pytest.raises(SchemaError):
            parse_instance(json.dumps(doc))

    def test_invalid_capacity(self):
        doc = {
            "M": 1, "K": 1, "sigma2": 1.0, "capacities": [-2.0],
            "sinr_targets": [1.0], "channels": [[[1.0, 0.0]]],
        }
        with pytest.raises(SchemaError):
            parse_instance(json.dumps(doc))

    def test_round_trip_paper_scale(self):
        rng = np.random.default_rng(5)
        inst = random_instance(rng, 8, 10)
        again = parse_instance(serialize_instance(inst))
        assert np.array_equal(again.channels, inst.channels)
        assert np.array_equal(again.sinr_targets, inst.sinr_targets)
        assert np.array_equal(again.capacities, inst.capacities)
        assert again.sigma2 == inst.sigma2

    def test_solution_round_trip(self):
        rng = np.random.default_rng(6)
        sol = random_solution(rng, 4, 3)
        again = parse_solution(serialize_solution(sol))
        assert np.array_equal(again.directions, sol.directions)
        assert np.array_equal(again.powers, sol.powers)
        assert np.array_equal(again.Q, sol.Q)


class TestValidation:
    def test_rejects_zero_channel(self):
        with pytest.raises(ValueError):
            ProblemInstance(
                channels=[[0.0, 0.0]], sinr_targets=[1.0], capacities=[2.0, 2.0], sigma2=1.0
            )

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValueError):
            PrimalSolution(directions=[[2.0]], powers=[1.0], Q=[[1.0]])

    def test_rejects_indefinite_q(self):
        with pytest.raises(ValueError):
            PrimalSolution(
                directions=[[1.0, 0.0]], powers=[1.0], Q=np.diag([1.0, -1.0])
            )
