import numpy as np
import pytest

from beamquant.dual import (
    FixedPointConfig,
    beta_map,
    build_c,
    build_gamma,
    dual_slack,
    recover_lambdas,
    solve_dual,
)
from beamquant.errors import InfeasibleError
from beamquant.model import ProblemInstance, dual_objective


def scalar_instance(capacity=2.0):
    return ProblemInstance(
        channels=[[1.0]], sinr_targets=[1.0], capacities=[capacity], sigma2=1.0
    )


def random_instance(rng, M, K, capacity=3.0):
    ch = rng.normal(scale=np.sqrt(0.5), size=(K, M, 2))
    return ProblemInstance(
        channels=ch[..., 0] + 1j * ch[..., 1],
        sinr_targets=rng.uniform(0.3, 1.2, K),
        capacities=np.full(M, capacity),
        sigma2=1.0,
    )


class TestBuildGamma:
    def test_zero_beta_is_identity(self):
        rng = np.random.default_rng(0)
        inst = random_instance(rng, 4, 3)
        assert np.array_equal(build_gamma(inst, np.zeros(3)), np.eye(4))

    def test_rank_one_term(self):
        inst = ProblemInstance(
            channels=[[1.0, 1.0j]], sinr_targets=[2.0], capacities=[2.0, 2.0], sigma2=1.0
        )
        G = build_gamma(inst, [0.5])
        # I + 0.5 * 2 * h h^H with h = (1, i)
        h = np.array([1.0, 1.0j])
        assert np.allclose(G, np.eye(2) + np.outer(h, h.conj()))

    def test_hermitian_pd(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng, 5, 4)
        G = build_gamma(inst, rng.uniform(0.0, 3.0, 4))
        assert np.allclose(G, G.conj().T)
        assert np.linalg.eigvalsh(G)[0] >= 1.0 - 1e-12


class TestRecoverLambdas:
    def test_scalar(self):
        # Gamma = [[1 + beta*gamma]], eta = 4: Lambda = (1 + beta)/3
        inst = scalar_instance()
        lambdas = recover_lambdas(inst, [2.0])
        assert lambdas.shape == (1, 1)
        assert lambdas[0, 0].real == pytest.approx(np.sqrt(3.0 / 3.0))

    def test_two_relay_frozen_values(self):
        # eta = (4, 4), Gamma = [[2, 1], [1, 2]] built from two real
        # channels; hand recursion gives
        #   Lambda_1 = [[2/3, 1/4], [1/4, 3/32]],
        #   Lambda_2[1, 1] = (2 - 1/4 - 4*3/32) / 3 = 13/24.
        inst = ProblemInstance(
            channels=[[1.0, 1.0], [1.0, -1.0]],
            sinr_targets=[1.0, 1.0],
            capacities=[2.0, 2.0],
            sigma2=1.0,
        )
        beta = [0.5, 0.5]
        G = build_gamma(inst, beta)
        assert np.allclose(G, [[2.0, 0.0], [0.0, 2.0]])
        # adjust channels so Gamma has the off-diagonal 1
        inst = ProblemInstance(
            channels=[[1.0, 1.0], [1.0, 0.0]],
            sinr_targets=[1.0, 1.0],
            capacities=[2.0, 2.0],
            sigma2=1.0,
        )
        beta = [0.5, 1.0]
        G = build_gamma(inst, beta)
        assert np.allclose(G, [[2.5, 0.5], [0.5, 1.5]])
        lambdas = recover_lambdas(inst, beta)
        L1 = np.outer(lambdas[0], lambdas[0].conj())
        assert L1[0, 0].real == pytest.approx(2.5 / 3.0)
        assert L1[0, 1] == pytest.approx(0.5 / 4.0)
        assert L1[1, 1].real == pytest.approx((0.5 / 4.0) ** 2 / (2.5 / 3.0))
        L2 = np.outer(lambdas[1], lambdas[1].conj())
        expected = (1.5 - 4.0 * L1[1, 1].real) / 3.0
        assert L2[1, 1].real == pytest.approx(expected)

    def test_structure(self):
        rng = np.random.default_rng(2)
        inst = random_instance(rng, 6, 4)
        lambdas = recover_lambdas(inst, rng.uniform(0.0, 2.0, 4))
        for m in range(6):
            assert np.all(lambdas[m, :m] == 0)
            assert lambdas[m, m].imag == 0
            assert lambdas[m, m].real > 0

    def test_zeroes_dual_slack(self):
        # the recovered multipliers must zero D for arbitrary beta >= 0
        rng = np.random.default_rng(3)
        for _ in range(25):
            M = int(rng.integers(1, 7))
            K = int(rng.integers(1, 7))
            inst = random_instance(rng, M, K)
            beta = rng.uniform(0.0, 2.0, K)
            lambdas = recover_lambdas(inst, beta)
            D = dual_slack(inst, beta, lambdas)
            scale = 1.0 + np.max(np.abs(build_gamma(inst, beta)))
            assert np.max(np.abs(D)) <= 1e-12 * scale


class TestBuildC:
    def test_scalar(self):
        # C_1 = 1 + Lambda = 1 + (1 + beta)/3 = (4 + beta)/3
        inst = scalar_instance()
        beta = np.array([2.0])
        lambdas = recover_lambdas(inst, beta)
        C = build_c(inst, beta, lambdas, 0)
        assert C[0, 0].real == pytest.approx(2.0)

    def test_excludes_own_user(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, 3, 2)
        beta = np.array([1.0, 2.0])
        lambdas = recover_lambdas(inst, beta)
        C0 = build_c(inst, beta, lambdas, 0)
        expected = (
            np.eye(3)
            + beta[1] * inst.sinr_targets[1] * inst.channel_outer(1)
            + np.diag(np.abs(np.diagonal(lambdas)) ** 2)
        )
        assert np.allclose(C0, expected)


class TestBetaMap:
    def test_scalar_map(self):
        # I(beta) = C_1 = (4 + beta)/3 for the unit scalar channel
        inst = scalar_instance()
        for b in [0.0, 1.0, 2.0, 5.0]:
            assert beta_map(inst, [b])[0] == pytest.approx((4.0 + b) / 3.0)

    def test_scalar_fixed_point(self):
        inst = scalar_instance()
        assert beta_map(inst, [2.0])[0] == pytest.approx(2.0)

    def test_interference_properties(self):
        # positivity, monotonicity, scalability of the dual map
        rng = np.random.default_rng(5)
        for _ in range(40):
            M = int(rng.integers(1, 6))
            K = int(rng.integers(1, 6))
            inst = random_instance(rng, M, K)
            b1 = rng.uniform(0.0, 1.5, K)
            b2 = b1 + rng.uniform(0.0, 1.0, K)
            alpha = 1.0 + rng.uniform(0.1, 3.0)
            i1 = beta_map(inst, b1)
            i2 = beta_map(inst, b2)
            ia = beta_map(inst, alpha * b1)
            assert np.all(i1 > 0)
            assert np.all(i2 >= i1 - 1e-12 * np.max(i1))
            assert np.all(ia <= alpha * i1 + 1e-12 * alpha * np.max(i1))


class TestSolveDual:
    def test_analytic(self):
        dual, state = solve_dual(scalar_instance())
        assert state.status == "Converged"
        assert dual.beta[0] == pytest.approx(2.0, abs=1e-9)
        assert dual.lambdas[0, 0].real ** 2 == pytest.approx(1.0, abs=1e-9)
        assert dual_objective(scalar_instance(), dual) == pytest.approx(2.0, abs=1e-8)

    def test_infeasible_capacity_one(self):
        # eta = 2: I(beta) = 2 + beta grows without bound
        with pytest.raises(InfeasibleError):
            solve_dual(scalar_instance(capacity=1.0))

    def test_monotone_iterates(self):
        inst = ProblemInstance(
            channels=np.random.default_rng(6).normal(size=(3, 4))
            + 1j * np.random.default_rng(7).normal(size=(3, 4)),
            sinr_targets=[0.8, 1.0, 1.2],
            capacities=[3.0] * 4,
            sigma2=1.0,
        )
        history = []
        solve_dual(inst, trace=lambda it, b, r: history.append(b.copy()))
        arr = np.array(history)
        assert np.all(np.diff(arr, axis=0) >= -1e-12)

    def test_fixed_point_is_stationary(self):
        rng = np.random.default_rng(8)
        inst = random_instance(rng, 5, 4)
        dual, _ = solve_dual(inst)
        again = beta_map(inst, dual.beta)
        assert np.max(np.abs(again - dual.beta)) <= 1e-8 * np.max(dual.beta)

    def test_kernel_direction(self):
        # at the fixed point, C_k - beta_k h_k h_k^H has h-dependent kernel
        rng = np.random.default_rng(9)
        inst = random_instance(rng, 4, 3)
        dual, _ = solve_dual(inst)
        for k in range(3):
            Ck = build_c(inst, dual.beta, dual.lambdas, k)
            A = Ck - dual.beta[k] * inst.channel_outer(k)
            eigs = np.linalg.eigvalsh(A)
            assert abs(eigs[0]) <= 1e-8 * (1 + np.max(np.abs(A)))
            assert eigs[1] > 1e-6

    def test_tight_iteration_budget_raises(self):
        from beamquant.errors import MaxIterationsError

        cfg = FixedPointConfig(tol=1e-10, max_iters=3)
        with pytest.raises((MaxIterationsError, InfeasibleError)):
            solve_dual(scalar_instance(), cfg)
