import math

import numpy as np
import pytest

import pairprobit as pp
from pairprobit.godambe import (InferenceError, _godambe_with_flag,
                                godambe_matrices, z_multiplier)
from pairprobit.model import ModelDims, iter_pairs

from helpers import random_instance


class TestVariabilityJ:
    def test_single_observation_rank_one(self):
        theta, counts, data, dims = random_instance(q=3, k=3, n=10, seed=0)
        one = pp.OrdinalDataset(data.rows[:1], k=dims.k)
        j = pp.variability_J(theta, one)
        u = pp.per_observation_score(theta, data.rows[0], dims)
        np.testing.assert_allclose(j, np.outer(u, u), atol=1e-12)
        assert np.linalg.matrix_rank(j, tol=1e-10) == 1

    def test_symmetric(self):
        theta, counts, data, dims = random_instance(q=3, k=4, n=100, seed=1)
        j = pp.variability_J(theta, data)
        np.testing.assert_array_equal(j, j.T)

    def test_psd(self):
        theta, counts, data, dims = random_instance(q=4, k=3, n=80, seed=2)
        j = pp.variability_J(theta, data)
        assert np.linalg.eigvalsh(j).min() >= -1e-10

    def test_matches_cell_enumeration_expectation(self):
        # brute-force oracle: E[u u^T] at the truth by enumerating the four
        # cells of a 2x2 table with their exact probabilities
        rho, a1, a2 = 0.45, 0.15, -0.3
        theta0 = np.array([rho, a1, a2])
        dims = ModelDims(q=2, k=2, n=5000)
        expected = np.zeros((3, 3))
        for l in (1, 2):
            for m in (1, 2):
                prob = pp.cell_prob(theta0, dims, 1, 2, l, m)
                u = pp.per_pair_score(theta0, dims, 1, 2, l, m)
                expected += prob * np.outer(u, u)

        sigma = pp.CorrelationParams(np.array([rho]))
        thr = pp.ThresholdSet(np.array([[a1], [a2]]))
        rng = np.random.default_rng(42)
        data = pp.sample_dataset(sigma, thr, 5000, rng)
        j = pp.variability_J(theta0, data)

        # per-entry Monte Carlo standard errors from the sampled outer products
        from pairprobit.pairwise import observation_score_matrix
        u_all = observation_score_matrix(theta0, data)
        prods = u_all[:, :, None] * u_all[:, None, :]
        se = prods.std(axis=0, ddof=1) / math.sqrt(data.n)
        assert np.all(np.abs(j - expected) <= 5.0 * se + 1e-12)


class TestSensitivityH:
    def test_equals_J_at_q2(self):
        theta, counts, data, dims = random_instance(q=2, k=3, n=60, seed=3)
        j = pp.variability_J(theta, data)
        h = pp.sensitivity_H(theta, counts)
        np.testing.assert_allclose(h, j, atol=1e-12)

    def test_symmetric_psd(self):
        theta, counts, data, dims = random_instance(q=3, k=3, n=120, seed=4)
        h = pp.sensitivity_H(theta, counts)
        np.testing.assert_array_equal(h, h.T)
        assert np.linalg.eigvalsh(h).min() >= -1e-10


class TestGodambeG:
    def test_j_equals_h_gives_h(self):
        theta, counts, data, dims = random_instance(q=2, k=2, n=50, seed=5)
        j = pp.variability_J(theta, data)
        h = pp.sensitivity_H(theta, counts)
        g = pp.godambe_G(j, h)
        np.testing.assert_allclose(g, h, atol=1e-10)

    def test_identity_case(self):
        g = pp.godambe_G(np.eye(4), np.eye(4))
        np.testing.assert_allclose(g, np.eye(4), atol=1e-14)

    def test_matches_solve_oracle(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(6, 6))
        j = a @ a.T + 6 * np.eye(6)
        b = rng.normal(size=(6, 6))
        h = b @ b.T + 6 * np.eye(6)
        want = h @ np.linalg.inv(j) @ h
        np.testing.assert_allclose(pp.godambe_G(j, h), want, atol=1e-10)

    def test_singular_j_falls_back_to_pinv(self):
        j = np.diag([1.0, 0.0, 2.0])
        h = np.eye(3)
        with pytest.warns(RuntimeWarning, match="singular"):
            g = pp.godambe_G(j, h)
        assert np.all(np.isfinite(g))
        _, flag = _godambe_with_flag(j, h)
        assert flag

    def test_matrices_bundle(self):
        theta, counts, data, dims = random_instance(q=3, k=3, n=150, seed=7)
        res = pp.fit_dataset(data)
        mats = godambe_matrices(res.theta_hat, data, counts)
        assert not mats.j_singular
        np.testing.assert_allclose(mats.g_hat, mats.g_hat.T, atol=1e-12)
        assert np.all(np.diag(np.linalg.inv(mats.g_hat)) > 0)


class TestWaldIntervals:
    def test_multiplier(self):
        assert z_multiplier(0.95) == pytest.approx(1.959964, abs=1e-6)

    def test_interval_structure(self):
        theta, counts, data, dims = random_instance(q=3, k=3, n=200, seed=8)
        res = pp.fit_dataset(data)
        mats = godambe_matrices(res.theta_hat, data, counts)
        ivs = pp.wald_intervals(res.theta_hat, mats.g_hat, dims, 0.95)
        assert len(ivs) == dims.n_params
        for iv in ivs:
            assert iv.lower <= iv.estimate <= iv.upper
            assert iv.std_error > 0
            assert iv.level == 0.95

    def test_correlation_clamping(self):
        # an enormous variance forces the clamp at +/-1
        dims = ModelDims(q=2, k=2, n=4)
        theta = np.array([0.98, 0.0, 0.0])
        g = np.eye(3) * 0.01  # G^-1 diagonal = 100, se = 5
        ivs = pp.wald_intervals(theta, g, dims, 0.95)
        assert ivs[0].upper == 1.0
        assert ivs[0].lower == -1.0
        # thresholds are not clamped
        assert ivs[1].upper > 1.0

    def test_non_pd_g_raises(self):
        dims = ModelDims(q=2, k=2, n=10)
        theta = np.array([0.1, 0.0, 0.0])
        g = np.diag([1.0, -0.5, 2.0])
        with pytest.raises(InferenceError, match="eigenvalue"):
            pp.wald_intervals(theta, g, dims, 0.95)

    def test_level_domain(self):
        dims = ModelDims(q=2, k=2, n=10)
        with pytest.raises(ValueError):
            pp.wald_intervals(np.zeros(3), np.eye(3), dims, 1.0)

    def test_se_scales_with_n(self):
        # same G, larger n: standard errors shrink like 1/sqrt(n)
        theta = np.array([0.1, 0.0, 0.0])
        g = np.eye(3)
        iv_small = pp.wald_intervals(theta, g, ModelDims(2, 2, 100), 0.95)
        iv_big = pp.wald_intervals(theta, g, ModelDims(2, 2, 10000), 0.95)
        assert iv_big[0].std_error == pytest.approx(iv_small[0].std_error / 10)
