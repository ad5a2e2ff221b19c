"""Consistency between the compiled kernel extension and the NumPy
fallback: both must produce the same numbers through the full stack."""

import math
import time

import numpy as np
import pytest

import pairprobit as pp
from pairprobit import gauss
from pairprobit._backend import available_backends

from helpers import random_instance

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_backends(),
    reason="compiled kernel extension not built")

INF = math.inf


@pytest.fixture
def both():
    mods = available_backends()
    if "compiled" not in mods:
        pytest.skip("compiled kernel extension not built")
    return mods["python"], mods["compiled"]


@needs_compiled
class TestScalarKernels:
    def test_bvn_cdf_agreement(self, both):
        py, cy = both
        rng = np.random.default_rng(0)
        limits = list(rng.uniform(-4, 4, 40)) + [INF, -INF, 0.0]
        rhos = list(rng.uniform(-0.99, 0.99, 10)) + \
            [0.0, 0.9249, 0.9251, -0.999999, 0.999999]
        for rho in rhos:
            for a in limits:
                for b in limits[::3]:
                    assert py.bvn_cdf(a, b, rho) == pytest.approx(
                        cy.bvn_cdf(a, b, rho), abs=5e-15)

    def test_univariate_agreement(self, both):
        py, cy = both
        for x in np.linspace(-8, 8, 33):
            assert py.norm_pdf(x) == pytest.approx(cy.norm_pdf(x), abs=1e-16)
            assert py.norm_cdf(x) == pytest.approx(cy.norm_cdf(x), abs=2e-16)

    def test_derivative_agreement(self, both):
        py, cy = both
        rng = np.random.default_rng(1)
        for _ in range(100):
            x1, x2 = rng.uniform(-3, 3, 2)
            rho = rng.uniform(-0.95, 0.95)
            assert py.bvn_cdf_dx1(x1, x2, rho) == pytest.approx(
                cy.bvn_cdf_dx1(x1, x2, rho), abs=1e-15)
            assert py.bvn_pdf(x1, x2, rho) == pytest.approx(
                cy.bvn_pdf(x1, x2, rho), abs=1e-15)
        assert cy.bvn_cdf_dx1(0.5, INF, 0.3) == py.bvn_cdf_dx1(0.5, INF, 0.3)
        assert cy.bvn_cdf_dx1(0.5, -INF, 0.3) == 0.0


@needs_compiled
class TestGridKernels:
    def test_pair_tables_agree(self, both):
        py, cy = both
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            cuts_x = np.concatenate(
                [[-np.inf], np.sort(rng.normal(0, 1.2, k - 1)), [np.inf]])
            cuts_y = np.concatenate(
                [[-np.inf], np.sort(rng.normal(0, 1.2, k - 1)), [np.inf]])
            rho = float(rng.uniform(-0.99, 0.99))
            for a, b in zip(py.pair_tables(cuts_x, cuts_y, rho),
                            cy.pair_tables(cuts_x, cuts_y, rho)):
                np.testing.assert_allclose(a, b, atol=2e-15)

    def test_pair_probs_agree(self, both):
        py, cy = both
        cuts = np.array([-np.inf, -1.0, 0.0, 1.0, np.inf])
        for rho in (-0.95, -0.3, 0.0, 0.6, 0.97):
            np.testing.assert_allclose(py.pair_probs(cuts, cuts, rho),
                                       cy.pair_probs(cuts, cuts, rho),
                                       atol=2e-15)


@needs_compiled
class TestFullStack:
    @pytest.fixture
    def switcher(self):
        prev = gauss.backend_name()
        yield gauss.set_backend
        gauss.set_backend(prev)

    def test_loglik_and_score_agree(self, switcher):
        theta, counts, data, dims = random_instance(q=4, k=4, n=200, seed=3)
        out = {}
        for name in ("python", "compiled"):
            switcher(name)
            out[name] = pp.loglik_and_score(theta, counts)
        assert out["python"][0] == pytest.approx(out["compiled"][0], rel=1e-13)
        np.testing.assert_allclose(out["python"][1], out["compiled"][1],
                                   rtol=1e-10, atol=1e-10)

    def test_fit_agrees(self, switcher):
        _, counts, data, dims = random_instance(q=3, k=3, n=150, seed=4)
        res = {}
        for name in ("python", "compiled"):
            switcher(name)
            res[name] = pp.maximize(counts, data, dims, pp.FitConfig())
        np.testing.assert_allclose(res["python"].theta_hat,
                                   res["compiled"].theta_hat, atol=1e-7)
        assert res["python"].loglik == pytest.approx(res["compiled"].loglik,
                                                     abs=1e-8)


@needs_compiled
class TestBenchmarkSanity:
    def test_compiled_not_slower_on_tables(self, both):
        # the compiled path should beat NumPy on small corner grids, where
        # python-side overhead dominates; generous 1.2x slack absorbs noise
        py, cy = both
        cuts = np.array([-np.inf, -1.0, -0.3, 0.4, 1.1, np.inf])
        rho = 0.55

        def bench(mod):
            best = math.inf
            for _ in range(7):
                t0 = time.perf_counter()
                for _ in range(200):
                    mod.pair_tables(cuts, cuts, rho)
                best = min(best, time.perf_counter() - t0)
            return best

        t_py = bench(py)
        t_cy = bench(cy)
        assert t_cy < 1.2 * t_py
