import numpy as np
import pytest

from mddl import (OracleConfig, kkt_residual, lasso_cd, lasso_objective,
                  prox_gradient_lasso)
from conftest import random_lasso_instance


class TestLassoCd:
    def test_identity_dictionary_is_soft_threshold(self, rng):
        b = rng.normal(size=12)
        x = lasso_cd(np.eye(12), b, 0.4)
        expect = np.sign(b) * np.maximum(np.abs(b) - 0.4, 0.0)
        assert np.max(np.abs(x - expect)) < 1e-12

    def test_large_lambda_gives_zero(self, rng):
        A = rng.normal(size=(15, 25))
        A /= np.linalg.norm(A, axis=0)
        b = rng.normal(size=15)
        lam = 1.0001 * np.max(np.abs(A.T @ b))
        assert np.all(lasso_cd(A, b, lam) == 0.0)

    def test_zero_column_rejected(self, rng):
        A = rng.normal(size=(5, 4))
        A[:, 2] = 0.0
        with pytest.raises(ValueError, match="column 2"):
            lasso_cd(A, rng.normal(size=5), 0.1)

    def test_kkt_optimality(self, rng):
        for _ in range(10):
            A, b, lam = random_lasso_instance(rng)
            x = lasso_cd(A, b, lam)
            assert kkt_residual(A, b, lam, x) < 1e-8

    def test_cross_check_against_prox_gradient(self, rng):
        # two structurally unrelated methods must land on the same objective
        for _ in range(5):
            A, b, lam = random_lasso_instance(rng, d_range=(20, 41), m_range=(20, 51))
            x_cd = lasso_cd(A, b, lam)
            x_pg = prox_gradient_lasso(A, b, lam, iters=30_000)
            o_cd = lasso_objective(A, b, x_cd, lam)
            o_pg = lasso_objective(A, b, x_pg, lam)
            assert abs(o_cd - o_pg) / abs(o_pg) < 1e-6

    def test_elastic_net_kkt(self, rng):
        A, b, lam = random_lasso_instance(rng)
        x = lasso_cd(A, b, lam, l2_penalty=0.1)
        assert kkt_residual(A, b, lam, x, l2_penalty=0.1) < 1e-8

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(max_sweeps=0)
        with pytest.raises(ValueError):
            OracleConfig(tol=0.0)


class TestKktResidual:
    def test_exact_solution_is_clean(self, rng):
        A, b, lam = random_lasso_instance(rng)
        x = lasso_cd(A, b, lam, OracleConfig(max_sweeps=50_000, tol=1e-14))
        assert kkt_residual(A, b, lam, x) < 1e-10

    def test_zero_vector_optimal_for_large_lambda(self, rng):
        A = rng.normal(size=(10, 8))
        b = rng.normal(size=10)
        lam = np.max(np.abs(A.T @ b))
        assert kkt_residual(A, b, lam, np.zeros(8)) == 0.0

    def test_perturbation_increases_residual(self, rng):
        for _ in range(5):
            A, b, lam = random_lasso_instance(rng)
            x = lasso_cd(A, b, lam)
            base = kkt_residual(A, b, lam, x)
            noisy = x + rng.normal(scale=1e-2, size=x.shape)
            assert kkt_residual(A, b, lam, noisy) > max(base, 1e-6)
