import numpy as np
import pytest

from censcopula.beran import KernelSpec
from censcopula.copula import (
    CopulaParam,
    Family,
    conditional_inverse,
    eta_from_theta,
    theta_from_tau,
    theta_from_tau_vec,
)
from censcopula.errors import EmptyNeighborhoodError
from censcopula.likelihood import PseudoData, fit_constant, total_loglik
from censcopula.local_fit import (
    CalibrationFit,
    LocalData,
    LocalFitConfig,
    fit_at,
    fit_at_points,
    fit_curve,
    local_loglik,
)


def copula_scenario(n, seed, tau_fn, family=Family.CLAYTON):
    """Covariate-indexed copula draws with known calibration truth."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(2.0, 5.0, n)
    theta = theta_from_tau_vec(family, tau_fn(x))
    u1 = rng.random(n)
    u2 = conditional_inverse(family, theta, rng.random(n), u1)
    pseudo = PseudoData(u1, u2, np.ones(n), np.ones(n))
    return pseudo, x


def make_cfg(family=Family.CLAYTON, h=3.0, grid=None, degree=1, min_n=5):
    grid = np.linspace(2.0, 5.0, 31) if grid is None else np.asarray(grid, dtype=float)
    return LocalFitConfig(family=family, kernel=KernelSpec(h), grid=grid, degree=degree, min_effective_n=min_n)


class TestLocalLoglik:
    def test_uniform_reduction_exact_weights(self):
        # all covariates equal: every kernel weight is identical, so the
        # degree-0 argmax must match the constant fit
        pseudo, _ = copula_scenario(200, 1, lambda x: np.full_like(x, 0.6))
        x = np.full(200, 3.0)
        cfg = make_cfg(degree=0, h=1.0)
        const = fit_constant(Family.CLAYTON, pseudo)
        fit = fit_at(3.0, pseudo, x, cfg)
        assert fit.beta0 == pytest.approx(const.eta, abs=1e-4)

    def test_uniform_reduction_objective_proportional(self):
        pseudo, _ = copula_scenario(100, 2, lambda x: np.full_like(x, 0.5))
        x = np.full(100, 3.0)
        cfg = make_cfg(degree=0, h=2.0)
        w_const = 0.75 / 2.0  # K(0)/h
        for eta in (-0.5, 0.0, 0.8):
            p = CopulaParam(Family.CLAYTON, float(np.exp(eta)))
            expected = w_const * total_loglik(p, pseudo)
            got = local_loglik([eta], 3.0, pseudo, x, cfg)
            assert got == pytest.approx(expected, rel=1e-12)

    def test_huge_bandwidth_matches_constant_argmax(self):
        pseudo, x = copula_scenario(300, 3, lambda x: np.full_like(x, 0.5))
        cfg = make_cfg(degree=0, h=1e6 * (x.max() - x.min()))
        const = fit_constant(Family.CLAYTON, pseudo)
        fit = fit_at(3.5, pseudo, x, cfg)
        assert fit.beta0 == pytest.approx(const.eta, abs=1e-4)

    def test_single_effective_point_is_finite(self):
        pseudo = PseudoData([0.3], [0.6], [1], [1])
        x = np.array([2.0])
        cfg = make_cfg(h=0.5, min_n=1)
        val = local_loglik([0.2, 0.1], 2.0, pseudo, x, cfg)
        assert np.isfinite(val)
        fit = fit_at(2.0, pseudo, x, cfg)
        assert np.isfinite(fit.beta0)

    def test_too_few_effective_points_raises(self):
        pseudo = PseudoData([0.3, 0.4], [0.6, 0.5], [1, 1], [1, 1])
        x = np.array([2.0, 2.1])
        cfg = make_cfg(h=0.5, min_n=5)
        with pytest.raises(EmptyNeighborhoodError):
            local_loglik([0.0], 2.0, pseudo, x, cfg)

    def test_convex_scenario_tau_at_center(self):
        tau_fn = lambda x: 0.1 * (x - 3.0) ** 2 + 0.3
        pseudo, x = copula_scenario(250, 42, tau_fn)
        cfg = make_cfg(h=1.0)
        fit = fit_at(3.0, pseudo, x, cfg)
        from censcopula.copula import tau_from_theta, link_inv

        tau_hat = tau_from_theta(link_inv(Family.CLAYTON, fit.beta0))
        assert tau_hat == pytest.approx(0.3, abs=0.1)

    def test_beta_smoothness_two_step_fd(self):
        pseudo, x = copula_scenario(150, 6, lambda x: np.full_like(x, 0.4))
        cfg = make_cfg(h=2.0)
        rng = np.random.default_rng(0)
        for _ in range(5):
            b = (rng.uniform(-0.5, 1.0), rng.uniform(-0.3, 0.3))
            for j in range(2):
                def f(t):
                    bb = list(b)
                    bb[j] = t
                    return local_loglik(bb, 3.2, pseudo, x, cfg)

                g1 = (f(b[j] + 1e-4) - f(b[j] - 1e-4)) / 2e-4
                g2 = (f(b[j] + 1e-5) - f(b[j] - 1e-5)) / 2e-5
                assert g1 == pytest.approx(g2, abs=1e-5 * max(1.0, abs(g1)))


class TestFitAt:
    def test_constant_truth_recovery(self):
        theta_true = theta_from_tau(Family.CLAYTON, 0.5).theta
        pseudo, x = copula_scenario(500, 11, lambda x: np.full_like(x, 0.5))
        cfg = make_cfg(h=3.0)
        for x0 in (2.5, 3.5, 4.5):
            fit = fit_at(x0, pseudo, x, cfg)
            assert fit.beta0 == pytest.approx(float(eta_from_theta(Family.CLAYTON, theta_true)), abs=0.2)

    def test_permutation_invariance(self):
        pseudo, x = copula_scenario(120, 12, lambda x: np.full_like(x, 0.5))
        cfg = make_cfg(h=1.5)
        fit = fit_at(3.0, pseudo, x, cfg)
        perm = np.random.default_rng(1).permutation(120)
        pseudo_p = PseudoData(pseudo.u1[perm], pseudo.u2[perm], pseudo.d1[perm], pseudo.d2[perm])
        fit_p = fit_at(3.0, pseudo_p, x[perm], cfg)
        assert fit_p.beta0 == pytest.approx(fit.beta0, abs=1e-10)
        assert fit_p.beta1 == pytest.approx(fit.beta1, abs=1e-10)

    def test_boundary_point(self):
        pseudo, x = copula_scenario(250, 13, lambda x: 0.1 * (x - 3.0) ** 2 + 0.3)
        cfg = make_cfg(h=1.0)
        fit = fit_at(float(x.min()), pseudo, x, cfg)
        assert np.isfinite(fit.beta1)


class TestFitCurve:
    def test_single_point_grid_equals_fit_at(self):
        pseudo, x = copula_scenario(200, 14, lambda x: np.full_like(x, 0.5))
        cfg = make_cfg(h=1.5, grid=[3.3])
        curve = fit_curve(pseudo, x, cfg)
        single = fit_at(3.3, pseudo, x, cfg)
        assert curve.eta_hat[0] == pytest.approx(single.beta0, abs=1e-9)
        assert isinstance(curve, CalibrationFit)

    def test_constant_scenario_flatness(self):
        pseudo, x = copula_scenario(500, 15, lambda x: np.full_like(x, 0.6))
        cfg = make_cfg(h=3.0)
        curve = fit_curve(pseudo, x, cfg)
        assert np.nanmax(curve.tau_hat) - np.nanmin(curve.tau_hat) < 0.25

    def test_link_identities(self):
        pseudo, x = copula_scenario(250, 16, lambda x: np.full_like(x, 0.5), family=Family.GUMBEL)
        cfg = make_cfg(family=Family.GUMBEL, h=2.0)
        curve = fit_curve(pseudo, x, cfg)
        valid = ~np.isnan(curve.eta_hat)
        assert np.all(curve.theta_hat[valid] >= 1.0)
        assert np.all((curve.tau_hat[valid] > -1.0) & (curve.tau_hat[valid] < 1.0))
        assert np.allclose(curve.theta_hat[valid], np.exp(curve.eta_hat[valid]) + 1.0, rtol=1e-12)

    def test_warm_start_sweep_matches_cold_fits(self):
        pseudo, x = copula_scenario(200, 17, lambda x: 0.1 * (x - 3.0) ** 2 + 0.3)
        cfg = make_cfg(h=1.5)
        ld = LocalData(pseudo, x)
        eta_sweep, _, _ = fit_at_points(np.array([2.8, 3.1, 3.6]), ld, cfg)
        for xi, ei in zip([2.8, 3.1, 3.6], eta_sweep):
            cold = fit_at(xi, pseudo, x, cfg)
            assert ei == pytest.approx(cold.beta0, abs=5e-3)


def test_nelder_mead_matches_scipy():
    from scipy.optimize import minimize

    from censcopula._optim import nelder_mead_2d

    def rosen(a, b):
        return (1 - a) ** 2 + 100 * (b - a * a) ** 2

    x, y, val, nfev, conv = nelder_mead_2d(rosen, -1.0, 1.0, fatol=1e-12, xatol=1e-8, maxfev=3000)
    ref = minimize(lambda p: rosen(*p), [-1.0, 1.0], method="Nelder-Mead",
                   options={"fatol": 1e-12, "xatol": 1e-8, "maxfev": 3000})
    assert conv
    assert val == pytest.approx(float(ref.fun), abs=1e-8)
    assert (x, y) == pytest.approx((1.0, 1.0), abs=1e-3)
