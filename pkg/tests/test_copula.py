import numpy as np
import pytest
from scipy import integrate, stats

from censcopula.copula import (
    EPS_U,
    CopulaParam,
    Family,
    cdf,
    clamp_unit,
    conditional_inverse,
    eta_from_theta,
    hfunc,
    link_inv,
    log_pdf,
    pdf,
    sample_pair,
    sample_pairs,
    tau_from_theta,
    theta_from_tau,
    theta_from_tau_vec,
)
from censcopula.errors import ParameterError

THETA_GRID = {
    Family.CLAYTON: [0.5, 3.0],
    Family.FRANK: [-4.0, 4.0],
    Family.GUMBEL: [1.5, 3.0],
}


def interior_grid(n=10):
    u = np.linspace(0.05, 0.95, n)
    return np.meshgrid(u, u, indexing="ij")


class TestCdf:
    def test_uniform_margin_boundary(self):
        assert cdf(CopulaParam(Family.CLAYTON, 2.0), 0.5, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_clayton_closed_form(self):
        # (4 + 4 - 1)^(-1/2)
        expected = 7.0 ** -0.5
        assert cdf(CopulaParam(Family.CLAYTON, 2.0), 0.5, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_gumbel_independence(self):
        assert cdf(CopulaParam(Family.GUMBEL, 1.0), 0.3, 0.7) == pytest.approx(0.21, abs=1e-12)

    def test_invalid_theta_rejected(self):
        with pytest.raises(ParameterError):
            CopulaParam(Family.CLAYTON, -1.0)
        with pytest.raises(ParameterError):
            CopulaParam(Family.FRANK, 0.0)
        with pytest.raises(ParameterError):
            CopulaParam(Family.GUMBEL, 0.99)

    @pytest.mark.parametrize("family", list(Family))
    def test_frechet_bounds(self, family):
        u1, u2 = interior_grid()
        for theta in THETA_GRID[family]:
            c = cdf(CopulaParam(family, theta), u1, u2)
            assert np.all(c <= np.minimum(u1, u2) + 1e-12)
            assert np.all(c >= np.maximum(u1 + u2 - 1.0, 0.0) - 1e-12)

    @pytest.mark.parametrize("family", list(Family))
    def test_boundary_identities(self, family):
        u = np.linspace(0.0, 1.0, 21)
        for theta in THETA_GRID[family]:
            p = CopulaParam(family, theta)
            assert np.allclose(cdf(p, u, np.ones_like(u)), u, atol=1e-12)
            assert np.allclose(cdf(p, np.ones_like(u), u), u, atol=1e-12)
            assert np.allclose(cdf(p, u, np.zeros_like(u)), 0.0, atol=1e-12)


class TestHfunc:
    def test_gumbel_independence(self):
        assert hfunc(CopulaParam(Family.GUMBEL, 1.0), 0.3, 0.7, wrt=1) == pytest.approx(0.7, abs=1e-12)

    def test_clayton_closed_form(self):
        # u1^(-theta-1) A^(-1/theta-1) = 8 * 7^(-3/2)
        expected = 8.0 * 7.0 ** -1.5
        p = CopulaParam(Family.CLAYTON, 2.0)
        got = hfunc(p, 0.5, 0.5, wrt=1)
        assert got == pytest.approx(expected, abs=1e-12)
        # independent route: central finite difference of the CDF
        step = 1e-6
        fd = (cdf(p, 0.5 + step, 0.5) - cdf(p, 0.5 - step, 0.5)) / (2 * step)
        assert got == pytest.approx(fd, abs=1e-8)

    @pytest.mark.parametrize("family", list(Family))
    def test_conditioning_coordinate_saturates(self, family):
        p = CopulaParam(family, THETA_GRID[family][1])
        for u1 in (0.2, 0.5, 0.9):
            assert hfunc(p, u1, 1.0 - EPS_U, wrt=1) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("family", list(Family))
    def test_matches_finite_difference(self, family):
        u1, u2 = interior_grid()
        step = 1e-6
        for theta in THETA_GRID[family]:
            p = CopulaParam(family, theta)
            fd1 = (cdf(p, u1 + step, u2) - cdf(p, u1 - step, u2)) / (2 * step)
            fd2 = (cdf(p, u1, u2 + step) - cdf(p, u1, u2 - step)) / (2 * step)
            assert np.max(np.abs(hfunc(p, u1, u2, wrt=1) - fd1)) < 1e-5
            assert np.max(np.abs(hfunc(p, u1, u2, wrt=2) - fd2)) < 1e-5

    @pytest.mark.parametrize("family", list(Family))
    def test_range_and_monotonicity(self, family):
        u2 = np.linspace(0.02, 0.98, 30)
        for theta in THETA_GRID[family]:
            p = CopulaParam(family, theta)
            h = hfunc(p, 0.4, u2, wrt=1)
            assert np.all((h >= 0.0) & (h <= 1.0))
            assert np.all(np.diff(h) >= -1e-12)


class TestPdf:
    def test_gumbel_independence_density(self):
        p = CopulaParam(Family.GUMBEL, 1.0)
        u1, u2 = interior_grid(7)
        assert np.allclose(pdf(p, u1, u2), 1.0, atol=1e-9)

    def test_clayton_closed_form(self):
        expected = 192.0 * 7.0 ** -2.5
        p = CopulaParam(Family.CLAYTON, 2.0)
        got = pdf(p, 0.5, 0.5)
        assert got == pytest.approx(expected, abs=1e-12)
        step = 1e-4
        fd = (
            cdf(p, 0.5 + step, 0.5 + step)
            - cdf(p, 0.5 + step, 0.5 - step)
            - cdf(p, 0.5 - step, 0.5 + step)
            + cdf(p, 0.5 - step, 0.5 - step)
        ) / (4 * step * step)
        assert got == pytest.approx(fd, abs=1e-6)

    def test_pdf_is_exp_log_pdf(self):
        p = CopulaParam(Family.FRANK, 4.0)
        u1, u2 = interior_grid(5)
        assert np.allclose(pdf(p, u1, u2), np.exp(log_pdf(p, u1, u2)), rtol=1e-14)

    @pytest.mark.parametrize("family", list(Family))
    def test_matches_mixed_finite_difference(self, family):
        u1, u2 = interior_grid()
        step = 5e-5
        for theta in THETA_GRID[family]:
            p = CopulaParam(family, theta)
            fd = (
                cdf(p, u1 + step, u2 + step)
                - cdf(p, u1 + step, u2 - step)
                - cdf(p, u1 - step, u2 + step)
                + cdf(p, u1 - step, u2 - step)
            ) / (4 * step * step)
            assert np.max(np.abs(pdf(p, u1, u2) - fd)) < 1e-4

    def test_unit_mass_quadrature(self):
        # tensor-product Gauss-Legendre, 64x64 nodes, at the worked example's theta
        x, w = np.polynomial.legendre.leggauss(64)
        t = 0.5 * (x + 1.0)
        w = 0.5 * w
        u1, u2 = np.meshgrid(t, t, indexing="ij")
        wts = np.outer(w, w)
        p = CopulaParam(Family.CLAYTON, 2.0)
        assert float(np.sum(pdf(p, u1, u2) * wts)) == pytest.approx(1.0, abs=1e-3)


class TestLinks:
    def test_gumbel_zero(self):
        assert link_inv(Family.GUMBEL, 0.0).theta == pytest.approx(2.0)

    def test_clayton_zero(self):
        assert link_inv(Family.CLAYTON, 0.0).theta == pytest.approx(1.0)

    def test_frank_identity(self):
        assert link_inv(Family.FRANK, 3.5).theta == pytest.approx(3.5)

    def test_frank_zero_surrogate(self):
        theta = link_inv(Family.FRANK, 0.0).theta
        assert theta != 0.0
        assert Family.FRANK.contains(theta)

    @pytest.mark.parametrize("family", list(Family))
    def test_roundtrip_and_domain(self, family):
        for eta in np.linspace(-5.0, 5.0, 21):
            p = link_inv(family, float(eta))
            assert family.contains(p.theta)
            if not (family is Family.FRANK and eta == 0.0):
                assert float(eta_from_theta(family, p.theta)) == pytest.approx(eta, abs=1e-12)


def mp_frank_tau(theta):
    """Independent Debye route (fixed-order adaptive quadrature in the test)."""
    integrand = lambda t: t / np.expm1(t) if t != 0.0 else 1.0
    val, _ = integrate.quad(integrand, 0.0, theta, epsabs=1e-12, limit=300)
    return 1.0 + 4.0 * (val / theta - 1.0) / theta


class TestTau:
    def test_clayton(self):
        assert tau_from_theta(CopulaParam(Family.CLAYTON, 2.0)) == pytest.approx(0.5)

    def test_gumbel_independence(self):
        assert tau_from_theta(CopulaParam(Family.GUMBEL, 1.0)) == 0.0

    def test_frank_half(self):
        assert tau_from_theta(CopulaParam(Family.FRANK, 5.736)) == pytest.approx(0.5, abs=1e-3)
        # oracle route, then verify the root
        assert mp_frank_tau(5.7362827) == pytest.approx(0.5, abs=1e-6)

    def test_frank_odd_symmetry(self):
        for th in (0.5, 2.0, 10.0):
            tp = tau_from_theta(CopulaParam(Family.FRANK, th))
            tm = tau_from_theta(CopulaParam(Family.FRANK, -th))
            assert tm == pytest.approx(-tp, abs=1e-12)

    def test_theta_from_tau_closed_forms(self):
        assert theta_from_tau(Family.CLAYTON, 0.6).theta == pytest.approx(3.0)
        assert theta_from_tau(Family.GUMBEL, 0.5).theta == pytest.approx(2.0)
        assert theta_from_tau(Family.FRANK, 0.5).theta == pytest.approx(5.736, abs=1e-3)

    @pytest.mark.parametrize("family", list(Family))
    def test_roundtrip(self, family):
        for tau in np.arange(0.1, 0.75, 0.1):
            back = tau_from_theta(theta_from_tau(family, float(tau)))
            assert back == pytest.approx(tau, abs=1e-6)

    def test_vectorized_matches_scalar(self):
        taus = np.array([-0.6, -0.2, 0.15, 0.45, 0.7])
        vec = theta_from_tau_vec(Family.FRANK, taus)
        for t, th in zip(taus, vec):
            assert th == pytest.approx(theta_from_tau(Family.FRANK, float(t)).theta, abs=1e-8)
        for fam in (Family.CLAYTON, Family.GUMBEL):
            taus = np.array([0.1, 0.5, 0.7])
            vec = theta_from_tau_vec(fam, taus)
            for t, th in zip(taus, vec):
                assert th == pytest.approx(theta_from_tau(fam, float(t)).theta)

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            theta_from_tau(Family.CLAYTON, -0.2)
        with pytest.raises(ParameterError):
            theta_from_tau(Family.GUMBEL, 1.0)
        with pytest.raises(ParameterError):
            theta_from_tau(Family.FRANK, 0.0)


class TestSampling:
    def test_gumbel_independence_tau(self):
        rng = np.random.default_rng(11)
        u1, u2 = sample_pairs(CopulaParam(Family.GUMBEL, 1.0), 10_000, rng)
        tau, _ = stats.kendalltau(u1, u2)
        assert abs(tau) < 0.02

    def test_clayton_tau(self):
        rng = np.random.default_rng(12)
        u1, u2 = sample_pairs(CopulaParam(Family.CLAYTON, 3.0), 10_000, rng)
        tau, _ = stats.kendalltau(u1, u2)
        assert tau == pytest.approx(0.6, abs=0.02)

    @pytest.mark.parametrize("family", list(Family))
    @pytest.mark.parametrize("target", [0.3, 0.6])
    def test_tau_recovery(self, family, target):
        rng = np.random.default_rng(1000 + family.code)
        p = theta_from_tau(family, target)
        u1, u2 = sample_pairs(p, 10_000, rng)
        tau, _ = stats.kendalltau(u1, u2)
        assert tau == pytest.approx(target, abs=0.02)

    def test_deterministic_given_stream_state(self):
        p = CopulaParam(Family.FRANK, 4.0)
        a = sample_pair(p, np.random.default_rng(5))
        b = sample_pair(p, np.random.default_rng(5))
        assert a == b

    @pytest.mark.parametrize("family", list(Family))
    def test_inverse_is_conditional_quantile(self, family):
        rng = np.random.default_rng(3)
        theta = THETA_GRID[family][1]
        u1 = rng.uniform(0.05, 0.95, 100)
        w = rng.uniform(0.05, 0.95, 100)
        u2 = conditional_inverse(family, theta, w, u1)
        back = hfunc(CopulaParam(family, theta), u1, u2, wrt=1)
        assert np.max(np.abs(back - w)) < 1e-8


def test_clamp_unit():
    u = np.array([0.0, 0.5, 1.0])
    c = clamp_unit(u)
    assert c[0] == EPS_U and c[2] == 1.0 - EPS_U and c[1] == 0.5
