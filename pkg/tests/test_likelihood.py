import math

import numpy as np
import pytest

from censcopula.copula import CopulaParam, Family, sample_pairs, theta_from_tau
from censcopula.errors import DataError
from censcopula.likelihood import (
    ConstantFit,
    PseudoData,
    fit_constant,
    loglik_contrib,
    loglik_terms,
    total_loglik,
)


def complete_pairs(p, n, seed):
    rng = np.random.default_rng(seed)
    u1, u2 = sample_pairs(p, n, rng)
    return PseudoData(u1, u2, np.ones(n), np.ones(n))


class TestContrib:
    def test_independence_density(self):
        p = CopulaParam(Family.GUMBEL, 1.0)
        assert loglik_contrib(p, 0.3, 0.7, 1, 1) == pytest.approx(0.0, abs=1e-9)

    def test_independence_cdf(self):
        p = CopulaParam(Family.GUMBEL, 1.0)
        assert loglik_contrib(p, 0.3, 0.7, 0, 0) == pytest.approx(math.log(0.21), abs=1e-10)

    def test_clayton_single_event(self):
        p = CopulaParam(Family.CLAYTON, 2.0)
        expected = math.log(8.0 * 7.0 ** -1.5)
        assert loglik_contrib(p, 0.5, 0.5, 1, 0) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("family,theta", [(Family.CLAYTON, 2.0), (Family.FRANK, -3.0), (Family.GUMBEL, 2.5)])
    def test_exchangeability(self, family, theta):
        p = CopulaParam(family, theta)
        rng = np.random.default_rng(0)
        for _ in range(20):
            u1, u2 = rng.uniform(0.02, 0.98, 2)
            for d1, d2 in ((0, 0), (1, 0), (0, 1), (1, 1)):
                a = loglik_contrib(p, u1, u2, d1, d2)
                b = loglik_contrib(p, u2, u1, d2, d1)
                assert a == pytest.approx(b, abs=1e-12)

    def test_finite_after_clamping(self):
        p = CopulaParam(Family.CLAYTON, 3.0)
        for d1, d2 in ((0, 0), (1, 0), (0, 1), (1, 1)):
            assert math.isfinite(loglik_contrib(p, 0.0, 1.0, d1, d2))


class TestTotal:
    def test_single_observation(self):
        p = CopulaParam(Family.FRANK, 4.0)
        data = PseudoData([0.4], [0.6], [1], [0])
        assert total_loglik(p, data) == pytest.approx(loglik_contrib(p, 0.4, 0.6, 1, 0), abs=1e-12)

    def test_additivity_on_duplication(self):
        p = CopulaParam(Family.GUMBEL, 2.0)
        data = complete_pairs(p, 50, 1)
        doubled = PseudoData(
            np.concatenate([data.u1, data.u1]),
            np.concatenate([data.u2, data.u2]),
            np.concatenate([data.d1, data.d1]),
            np.concatenate([data.d2, data.d2]),
        )
        assert total_loglik(p, doubled) == pytest.approx(2.0 * total_loglik(p, data), rel=1e-12)

    def test_empty_data_rejected(self):
        with pytest.raises(DataError):
            PseudoData([], [], [], [])

    def test_grid_argmax_near_truth(self):
        # independent oracle: brute-force search over a theta grid
        data = complete_pairs(CopulaParam(Family.CLAYTON, 3.0), 1000, 42)
        grid = np.arange(2.0, 4.05, 0.1)
        values = [total_loglik(CopulaParam(Family.CLAYTON, float(t)), data) for t in grid]
        best = grid[int(np.argmax(values))]
        assert abs(best - 3.0) <= 0.3

    def test_eta_smoothness_two_step_fd(self):
        # central differences at two step sizes agree: the branch-switched
        # evaluation must stay smooth in the calibration value
        rng = np.random.default_rng(9)
        for family in Family:
            data = complete_pairs(CopulaParam(family, 2.0 if family is not Family.FRANK else 4.0), 200, 7)
            data = PseudoData(data.u1, data.u2, rng.integers(0, 2, 200), rng.integers(0, 2, 200))
            for eta in rng.uniform(-1.5, 1.5, 5):

                def f(e):
                    theta = 0.0
                    from censcopula.copula import theta_from_eta

                    return total_loglik(CopulaParam(family, float(theta_from_eta(family, e))), data)

                g1 = (f(eta + 1e-4) - f(eta - 1e-4)) / 2e-4
                g2 = (f(eta + 1e-5) - f(eta - 1e-5)) / 2e-5
                assert g1 == pytest.approx(g2, abs=1e-5 * max(1.0, abs(g1)))

    def test_per_point_theta_terms(self):
        p = CopulaParam(Family.CLAYTON, 2.0)
        data = complete_pairs(p, 30, 3)
        thetas = np.linspace(1.0, 3.0, 30)
        terms = loglik_terms(Family.CLAYTON, thetas, data)
        for i in (0, 10, 29):
            q = CopulaParam(Family.CLAYTON, float(thetas[i]))
            assert terms[i] == pytest.approx(
                loglik_contrib(q, data.u1[i], data.u2[i], data.d1[i], data.d2[i]), abs=1e-10
            )


class TestFitConstant:
    def test_gumbel_recovery(self):
        data = complete_pairs(CopulaParam(Family.GUMBEL, 2.0), 2000, 2024)
        fit = fit_constant(Family.GUMBEL, data)
        assert fit.converged
        assert fit.param.theta == pytest.approx(2.0, abs=0.15)
        assert fit.loglik == pytest.approx(total_loglik(fit.param, data), abs=1e-10)

    def test_clayton_constant_scenario_tau(self):
        p = theta_from_tau(Family.CLAYTON, 0.6)
        data = complete_pairs(p, 250, 77)
        fit = fit_constant(Family.CLAYTON, data)
        assert fit.tau == pytest.approx(0.6, abs=0.08)

    def test_invariant_to_init(self):
        data = complete_pairs(CopulaParam(Family.FRANK, 5.0), 400, 5)
        etas = [fit_constant(Family.FRANK, data, init=i).eta for i in (-1.0, 0.0, 1.0)]
        assert max(etas) - min(etas) < 1e-6

    def test_all_censored_degenerate_is_finite(self):
        n = 40
        u = np.full(n, 1.0 - 1e-10)
        data = PseudoData(u, u, np.zeros(n), np.zeros(n))
        for family in Family:
            fit = fit_constant(family, data)
            assert math.isfinite(fit.loglik)
            assert math.isfinite(fit.eta)

    def test_result_type(self):
        data = complete_pairs(CopulaParam(Family.CLAYTON, 1.5), 100, 8)
        fit = fit_constant(Family.CLAYTON, data)
        assert isinstance(fit, ConstantFit)
        assert fit.iterations > 0
        assert -1.0 < fit.tau < 1.0
