"""Spectral, Matern and generalized Wendland kernels and auxiliary-parameter fitting"""

import math

import numpy as np
import pytest
from scipy import integrate, special

from errors import DivergenceError, DomainMismatchError, DuplicatePointsError, ParameterError
from geometry import Domain, DomainPoint, PointSet, regular_placement_sphere, uniform_grid_interval
from kernels import (EuclideanMaternKernel, GeneralizedWendlandKernel, NormalizationKind,
                     SpectralParams, TruncatedSpectralKernel, default_distance_grid,
                     fit_auxiliary_parameters, gram_matrix, matern_eval, spectral_kernel_eval,
                     spectral_truncation_tail, wendland_eval, wendland_integral)
from spectral import spherical_harmonic_basis


def unit_diagonal(s=5.0, tau=20.0):
    return SpectralParams(s, tau, 1.0, NormalizationKind.UNIT_DIAGONAL)


@pytest.fixture(scope="module")
def spectral_target_fits():
    """Matern (nu = 4) and Wendland (kappa = 3.5) fits to the s = 5, tau = 20 field"""
    target = TruncatedSpectralKernel(unit_diagonal(), 60, Domain.SPHERE)
    grid = default_distance_grid()
    return (fit_auxiliary_parameters(target, EuclideanMaternKernel(4.0, 1.0), grid),
            fit_auxiliary_parameters(target, GeneralizedWendlandKernel(3.5, 1.0), grid))


class TestSpectralParams:
    def test_rejects_nonpositive_tau_and_sigma2(self):
        with pytest.raises(ParameterError):
            SpectralParams(2.0, 0.0)
        with pytest.raises(ParameterError):
            SpectralParams(2.0, 1.0, sigma2=-1.0)

    def test_smoothness_must_exceed_half_dimension(self):
        with pytest.raises(ParameterError):
            TruncatedSpectralKernel(SpectralParams(1.0, 1.0), 10, Domain.SPHERE)
        TruncatedSpectralKernel(SpectralParams(0.75, 1.0), 10, Domain.INTERVAL)

    def test_normalization_parsed_from_string(self):
        assert SpectralParams(2.0, 1.0, normalization="none").normalization is NormalizationKind.NONE


class TestTruncatedSpectralKernel:
    def test_unit_diagonal_on_sphere(self):
        kernel = TruncatedSpectralKernel(unit_diagonal(), 100, Domain.SPHERE)
        ps = regular_placement_sphere(50)
        np.testing.assert_allclose(kernel.diagonal(ps), 1.0, rtol=1e-12)
        np.testing.assert_allclose(np.diag(kernel.gram(ps)), 1.0, rtol=1e-12)
        x = ps[3]
        assert spectral_kernel_eval(unit_diagonal(), 100, x, x) == pytest.approx(1.0, rel=1e-12)

    def test_power_normalization(self):
        params = SpectralParams(3.0, 4.0, 2.0)
        kernel = TruncatedSpectralKernel(params, 40, Domain.SPHERE)
        assert kernel.v == pytest.approx(4.0 ** -2.0)
        assert kernel.microergodic == pytest.approx(2.0 / 16.0)

    def test_matches_harmonic_expansion(self):
        params = SpectralParams(2.5, 3.0, 1.5)
        kernel = TruncatedSpectralKernel(params, 10, Domain.SPHERE)
        ps = regular_placement_sphere(30)
        basis = spherical_harmonic_basis(10, ps.coords)
        l = np.repeat(np.arange(11), 2 * np.arange(11) + 1)
        weights = params.sigma2 * kernel.v * (params.tau + l * (l + 1.0)) ** -params.s
        np.testing.assert_allclose(kernel.gram(ps), (basis * weights) @ basis.T, atol=1e-12)

    def test_symmetric_in_arguments(self):
        a = DomainPoint.on_sphere((1, 2, 3))
        b = DomainPoint.on_sphere((-1, 0, 2))
        params = SpectralParams(3.0, 5.0)
        assert spectral_kernel_eval(params, 30, a, b) == pytest.approx(
            spectral_kernel_eval(params, 30, b, a), rel=1e-14)

    def test_interval_diagonal_has_unit_mean(self):
        kernel = TruncatedSpectralKernel(unit_diagonal(2.0, 1.0), 200, Domain.INTERVAL)
        diagonal = kernel.diagonal(uniform_grid_interval(2000))
        assert float(np.mean(diagonal)) == pytest.approx(1.0, rel=1e-3)

    def test_domain_mismatch(self):
        kernel = TruncatedSpectralKernel(unit_diagonal(), 10, Domain.SPHERE)
        with pytest.raises(DomainMismatchError):
            kernel.gram(uniform_grid_interval(5))

    def test_describe(self):
        info = TruncatedSpectralKernel(unit_diagonal(), 10, Domain.SPHERE).describe()
        assert info["variant"] == "spectral"
        assert info["normalization"] == "unit_diagonal"


class TestTruncationTail:
    def test_diverges_at_half_dimension(self):
        with pytest.raises(DivergenceError):
            spectral_truncation_tail(SpectralParams(1.0, 1.0), 100, Domain.SPHERE)

    def test_decreasing_in_truncation(self):
        params = SpectralParams(2.0, 1.0)
        tails = [spectral_truncation_tail(params, L) for L in (10, 50, 100)]
        assert tails[0] > tails[1] > tails[2] > 0

    def test_tail_accounts_for_dropped_mass(self):
        params = SpectralParams(2.0, 1.0)
        ps = regular_placement_sphere(2)
        short = TruncatedSpectralKernel(params, 100).diagonal(ps)[0]
        long = TruncatedSpectralKernel(params, 2000).diagonal(ps)[0]
        assert short + spectral_truncation_tail(params, 100) == pytest.approx(
            long + spectral_truncation_tail(params, 2000), rel=1e-8)

    def test_interval_tail(self):
        params = SpectralParams(1.5, 1.0)
        assert spectral_truncation_tail(params, 100, Domain.INTERVAL) > 0


class TestMatern:
    def test_exponential_case(self):
        r = np.linspace(0, 2, 9)
        np.testing.assert_allclose(matern_eval(0.5, 4.0, 2.0, r), 2.0 * np.exp(-2.0 * r))

    def test_half_integer_closed_form(self):
        r = np.linspace(0, 2, 9)
        x = math.sqrt(3.0) * r
        np.testing.assert_allclose(matern_eval(1.5, 3.0, 1.0, r), (1 + x) * np.exp(-x))

    def test_general_order_against_bessel(self):
        nu, tau = 1.3, 2.0
        r = np.array([0.05, 0.4, 1.0, 2.0])
        x = math.sqrt(tau) * r
        expected = 2 ** (1 - nu) / special.gamma(nu) * x ** nu * special.kv(nu, x)
        np.testing.assert_allclose(matern_eval(nu, tau, 1.0, r), expected, rtol=1e-12)

    def test_continuous_at_origin_and_across_branches(self):
        assert matern_eval(1.3, 1.0, 1.0, 0.0) == 1.0
        assert matern_eval(1.3, 1.0, 1.0, 1e-6) == pytest.approx(1.0, abs=1e-5)
        r = np.linspace(0, 2, 11)
        np.testing.assert_allclose(matern_eval(0.5 + 1e-9, 1.0, 1.0, r),
                                   matern_eval(0.5, 1.0, 1.0, r), atol=1e-7)

    def test_scalar_in_scalar_out(self):
        assert isinstance(matern_eval(2.0, 1.0, 1.0, 0.3), float)

    def test_invalid_order(self):
        with pytest.raises(ParameterError):
            matern_eval(0.0, 1.0, 1.0, 0.5)

    def test_kernel_smoothness_mapping(self):
        kernel = EuclideanMaternKernel(2.5, 1.0)
        assert kernel.smoothness(2) == 3.5
        assert kernel.with_scale(4.0).tau == 4.0


class TestWendland:
    def test_integer_kappa_closed_form(self):
        mu = 4.0
        r = np.array([0.0, 0.01, 0.03, 0.2, 0.5, 0.9, 1.0, 1.5])
        z = np.minimum(r, 1.0)
        expected = (1 - z) ** (mu + 1) * (1 + (mu + 1) * z) / ((mu + 1) * (mu + 2))
        np.testing.assert_allclose(wendland_eval(1.0, mu, 1.0, 1.0, r), expected,
                                   rtol=1e-8, atol=1e-14)

    def test_origin_is_beta_function(self):
        value = wendland_integral(1.5, 4.0, 0.0)[0]
        assert value == pytest.approx(special.beta(3.0, 5.0), rel=1e-14)
        scale = 2.0 ** -0.5 / special.gamma(1.5)
        assert wendland_eval(1.5, 4.0, 0.7, 3.0, 0.0) == pytest.approx(3.0 * scale * value)

    def test_quadrature_branches_agree_with_direct_integral(self):
        kappa, mu = 1.5, 4.0
        for z in (0.01, 0.049, 0.051, 0.2, 0.6):
            direct, _ = integrate.quad(
                lambda u: u * (u * u - z * z) ** (kappa - 1) * (1 - u) ** mu, z, 1,
                epsabs=1e-14, epsrel=1e-12)
            assert wendland_integral(kappa, mu, z)[0] == pytest.approx(direct, rel=1e-8)

    def test_compact_support(self):
        values = wendland_eval(1.5, 4.0, 0.8, 1.0, np.array([0.8, 1.0, 2.0]))
        np.testing.assert_array_equal(values, 0.0)

    def test_mu_below_threshold(self):
        with pytest.raises(ParameterError):
            GeneralizedWendlandKernel(1.5, 1.0, mu=3.0)

    def test_positive_definite_gram(self):
        kernel = GeneralizedWendlandKernel(1.5, 1.0)
        assert kernel.mu == 4.0
        eigenvalues = np.linalg.eigvalsh(kernel.gram(regular_placement_sphere(100)))
        assert eigenvalues.min() > 0

    def test_smoothness_mapping(self):
        assert GeneralizedWendlandKernel(1.5, 1.0).smoothness(2) == 3.0


class TestGramAndFitting:
    def test_duplicate_points_rejected(self):
        ps = PointSet(Domain.SPHERE, [[1, 0, 0], [1, 0, 0]])
        with pytest.raises(DuplicatePointsError):
            gram_matrix(EuclideanMaternKernel(1.5, 1.0), ps)

    def test_gram_is_symmetric(self):
        K = gram_matrix(GeneralizedWendlandKernel(0.5, 1.2), regular_placement_sphere(60))
        np.testing.assert_array_equal(K, K.T)

    def test_recovers_matern_parameters(self):
        target = EuclideanMaternKernel(1.5, 4.0, 2.0)
        fit = fit_auxiliary_parameters(target, EuclideanMaternKernel(1.5, 1.0),
                                       default_distance_grid())
        assert fit.scale == pytest.approx(4.0, rel=1e-4)
        assert fit.sigma2 == pytest.approx(2.0, rel=1e-4)
        assert fit.relative_residual < 1e-5
        assert fit.model.nu == 1.5

    @pytest.mark.slow
    def test_matern_fits_spectral_target(self, spectral_target_fits):
        matern, _ = spectral_target_fits
        assert matern.model.nu == 4.0
        assert matern.scale > 0 and matern.sigma2 > 0
        assert matern.relative_residual <= 0.05

    @pytest.mark.slow
    def test_wendland_fit_is_closer_than_matern(self, spectral_target_fits):
        matern, wendland = spectral_target_fits
        assert wendland.model.mu == 6.0
        assert wendland.relative_residual < matern.relative_residual
