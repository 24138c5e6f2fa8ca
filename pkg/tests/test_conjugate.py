import math

import numpy as np
import pytest

from streamcpd import (
    NiwParams,
    NormalGammaParams,
    ParameterError,
    ng_posterior_predictive_logpdf,
    ng_update,
    niw_posterior_predictive_logpdf,
    niw_update,
)

from oracles import (
    bivariate_normalization,
    ng_batch_posterior,
    ng_scipy_logpdf,
    niw_batch_posterior,
    niw_scipy_logpdf,
    univariate_normalization,
)


class TestNormalGammaValidation:
    @pytest.mark.parametrize("bad", [
        dict(mu=float("nan"), kappa=1, alpha=1, beta=1),
        dict(mu=0, kappa=0, alpha=1, beta=1),
        dict(mu=0, kappa=-1, alpha=1, beta=1),
        dict(mu=0, kappa=1, alpha=0, beta=1),
        dict(mu=0, kappa=1, alpha=1, beta=-2),
        dict(mu=0, kappa=float("inf"), alpha=1, beta=1),
    ])
    def test_rejects_out_of_domain(self, bad):
        with pytest.raises(ParameterError):
            NormalGammaParams(**bad)

    def test_rejects_non_finite_observation(self):
        p = NormalGammaParams(0, 1, 1, 1)
        with pytest.raises(ParameterError):
            ng_posterior_predictive_logpdf(p, float("inf"))
        with pytest.raises(ParameterError):
            ng_update(p, float("nan"))


class TestNormalGammaPredictive:
    def test_reference_value_at_prior_mean(self):
        # Student-t with df=2, loc=0, scale=sqrt(2); density at 0 is
        # Gamma(1.5) / (Gamma(1) * sqrt(2*pi*2)) = 1/4.
        p = NormalGammaParams(0, 1, 1, 1)
        assert ng_posterior_predictive_logpdf(p, 0.0) == pytest.approx(math.log(0.25), rel=1e-12)

    def test_matches_scipy_parameterization(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = NormalGammaParams(
                rng.normal(), rng.uniform(0.2, 5), rng.uniform(0.2, 5), rng.uniform(0.2, 5)
            )
            x = rng.normal(scale=3)
            want = ng_scipy_logpdf(p.mu, p.kappa, p.alpha, p.beta, x)
            assert ng_posterior_predictive_logpdf(p, x) == pytest.approx(want, rel=1e-12)

    def test_symmetric_about_location(self):
        p = NormalGammaParams(1.7, 2.0, 3.0, 0.5)
        for c in (0.1, 1.0, 7.3):
            left = ng_posterior_predictive_logpdf(p, p.mu - c)
            right = ng_posterior_predictive_logpdf(p, p.mu + c)
            assert left == pytest.approx(right, rel=1e-14)

    def test_density_normalizes(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            p = NormalGammaParams(
                rng.normal(), rng.uniform(0.5, 4), rng.uniform(0.6, 4), rng.uniform(0.2, 4)
            )
            scale = math.sqrt(p.beta * (p.kappa + 1) / (p.alpha * p.kappa))
            mass = univariate_normalization(
                lambda x: ng_posterior_predictive_logpdf(p, x), p.mu, scale
            )
            assert mass == pytest.approx(1.0, abs=1e-6)


class TestNormalGammaUpdate:
    def test_observation_at_mean_adds_no_deviation(self):
        p = ng_update(NormalGammaParams(0, 1, 1, 1), 0.0)
        assert (p.mu, p.kappa, p.alpha, p.beta) == (0.0, 2.0, 1.5, 1.0)

    def test_two_sigma_observation(self):
        p = ng_update(NormalGammaParams(0, 1, 1, 1), 2.0)
        assert (p.mu, p.kappa, p.alpha, p.beta) == (1.0, 2.0, 1.5, 2.0)

    def test_update_is_pure(self):
        p = NormalGammaParams(0.5, 1.0, 2.0, 1.5)
        first = ng_update(p, 1.25)
        second = ng_update(p, 1.25)
        assert (p.mu, p.kappa, p.alpha, p.beta) == (0.5, 1.0, 2.0, 1.5)
        assert (first.mu, first.kappa, first.alpha, first.beta) == (
            second.mu,
            second.kappa,
            second.alpha,
            second.beta,
        )

    def test_counts_grow_in_integer_steps(self):
        p = NormalGammaParams(0, 2.5, 0.75, 1)
        for n in range(1, 20):
            p = ng_update(p, 0.3 * n)
            assert p.kappa == 2.5 + n
            assert p.alpha == 0.75 + n / 2

    def test_sequential_equals_batch(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            mu0, k0 = rng.normal(), rng.uniform(0.2, 4)
            a0, b0 = rng.uniform(0.2, 4), rng.uniform(0.2, 4)
            xs = rng.normal(size=rng.integers(1, 51))
            p = NormalGammaParams(mu0, k0, a0, b0)
            for x in xs:
                p = ng_update(p, x)
            mu_n, k_n, a_n, b_n = ng_batch_posterior(mu0, k0, a0, b0, xs)
            assert p.mu == pytest.approx(mu_n, rel=1e-10, abs=1e-12)
            assert p.kappa == pytest.approx(k_n, rel=1e-12)
            assert p.alpha == pytest.approx(a_n, rel=1e-12)
            assert p.beta == pytest.approx(b_n, rel=1e-10)


class TestNiwValidation:
    def test_rejects_asymmetric_psi(self):
        with pytest.raises(ParameterError):
            NiwParams(np.zeros(2), 1.0, 3.0, np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_indefinite_psi(self):
        with pytest.raises(ParameterError):
            NiwParams(np.zeros(2), 1.0, 3.0, np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_small_nu(self):
        with pytest.raises(ParameterError):
            NiwParams(np.zeros(3), 1.0, 1.5, np.eye(3))

    def test_rejects_dimension_mismatch(self):
        p = NiwParams(np.zeros(2), 1.0, 3.0, np.eye(2))
        with pytest.raises(ParameterError):
            niw_posterior_predictive_logpdf(p, [1.0, 2.0, 3.0])
        with pytest.raises(ParameterError):
            niw_update(p, [1.0])


class TestNiwPredictive:
    def test_matches_scipy_parameterization(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 3):
            for _ in range(20):
                a = rng.normal(size=(d, d))
                psi = a @ a.T + d * np.eye(d)
                p = NiwParams(rng.normal(size=d), rng.uniform(0.3, 4), d + rng.uniform(0.2, 4), psi)
                x = rng.normal(size=d, scale=2)
                want = niw_scipy_logpdf(p.mu, p.kappa, p.nu, p.psi, x)
                assert niw_posterior_predictive_logpdf(p, x) == pytest.approx(want, rel=1e-12)

    def test_d1_reduces_to_normal_gamma(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            m, k = rng.normal(), rng.uniform(0.3, 4)
            alpha, beta = rng.uniform(0.6, 4), rng.uniform(0.3, 4)
            x = rng.normal(scale=2)
            ng = NormalGammaParams(m, k, alpha, beta)
            niw = NiwParams([m], k, 2 * alpha, [[2 * beta]])
            assert niw_posterior_predictive_logpdf(niw, [x]) == pytest.approx(
                ng_posterior_predictive_logpdf(ng, x), rel=1e-10
            )

    def test_elliptical_symmetry(self):
        p = NiwParams([1.0, -2.0], 2.0, 5.0, np.array([[2.0, 0.4], [0.4, 1.0]]))
        rng = np.random.default_rng(5)
        for _ in range(10):
            v = rng.normal(size=2)
            plus = niw_posterior_predictive_logpdf(p, p.mu + v)
            minus = niw_posterior_predictive_logpdf(p, p.mu - v)
            assert plus == pytest.approx(minus, rel=1e-13)

    def test_density_normalizes_bivariate(self):
        rng = np.random.default_rng(6)
        for _ in range(3):
            a = rng.normal(size=(2, 2))
            psi = a @ a.T + 2 * np.eye(2)
            p = NiwParams(rng.normal(size=2), rng.uniform(0.5, 3), 2 + rng.uniform(0.5, 4), psi)
            df = p.nu - 1.0
            shape = p.psi * (p.kappa + 1) / (p.kappa * df)
            scales = np.sqrt(np.diag(shape))
            mass = bivariate_normalization(
                lambda pts: np.array([niw_posterior_predictive_logpdf(p, row) for row in pts]),
                p.mu,
                scales,
            )
            assert mass == pytest.approx(1.0, abs=1e-4)


class TestNiwUpdate:
    def test_observation_at_mean_keeps_psi(self):
        p = NiwParams([0.5, -0.5], 2.0, 4.0, np.eye(2))
        q = niw_update(p, p.mu)
        np.testing.assert_array_equal(q.psi, p.psi)
        np.testing.assert_array_equal(q.mu, p.mu)
        assert (q.kappa, q.nu) == (3.0, 5.0)

    def test_d1_update_matches_normal_gamma(self):
        rng = np.random.default_rng(7)
        ng = NormalGammaParams(0.3, 1.2, 0.9, 1.1)
        niw = NiwParams([0.3], 1.2, 1.8, [[2.2]])
        for _ in range(30):
            x = rng.normal()
            ng = ng_update(ng, x)
            niw = niw_update(niw, [x])
            assert niw.mu[0] == pytest.approx(ng.mu, rel=1e-10, abs=1e-12)
            assert niw.kappa == pytest.approx(ng.kappa, rel=1e-12)
            assert niw.nu == pytest.approx(2 * ng.alpha, rel=1e-12)
            assert niw.psi[0, 0] == pytest.approx(2 * ng.beta, rel=1e-10)

    def test_sequential_equals_batch(self):
        rng = np.random.default_rng(8)
        for d in (2, 3):
            for _ in range(30):
                a = rng.normal(size=(d, d))
                psi0 = a @ a.T + d * np.eye(d)
                mu0 = rng.normal(size=d)
                k0, nu0 = rng.uniform(0.3, 3), d + rng.uniform(0.2, 3)
                X = rng.normal(size=(rng.integers(1, 51), d))
                p = NiwParams(mu0, k0, nu0, psi0)
                for x in X:
                    p = niw_update(p, x)
                mu_n, k_n, nu_n, psi_n = niw_batch_posterior(mu0, k0, nu0, psi0, X)
                np.testing.assert_allclose(p.mu, mu_n, rtol=1e-10, atol=1e-12)
                assert p.kappa == pytest.approx(k_n, rel=1e-12)
                assert p.nu == pytest.approx(nu_n, rel=1e-12)
                np.testing.assert_allclose(p.psi, psi_n, rtol=1e-10, atol=1e-10)

    def test_update_is_pure_and_psi_stays_spd(self):
        p = NiwParams(np.zeros(2), 1.0, 3.0, np.eye(2))
        x = np.array([4.0, -4.0])
        q1 = niw_update(p, x)
        q2 = niw_update(p, x)
        np.testing.assert_array_equal(p.psi, np.eye(2))
        np.testing.assert_array_equal(q1.psi, q2.psi)
        assert np.all(np.linalg.eigvalsh(q1.psi) > 0)

    def test_inputs_are_immutable(self):
        p = NiwParams(np.zeros(2), 1.0, 3.0, np.eye(2))
        with pytest.raises(ValueError):
            p.psi[0, 0] = 5.0
        with pytest.raises(ValueError):
            p.mu[0] = 1.0
