"""Coefficient laws and Karhunen-Loeve / direct Gaussian field sampling"""

import numpy as np
import pytest

from errors import ParameterError
from geometry import Domain, regular_placement_sphere, uniform_grid_interval
from kernels import NormalizationKind, SpectralParams, TruncatedSpectralKernel
from sampler import (CoefficientLaw, KarhunenLoeveSampler, LawKind, kl_coefficients,
                     sample_gaussian_direct, sample_kl, standardized_draw)

LAWS = [CoefficientLaw(LawKind.GAUSSIAN), CoefficientLaw(LawKind.RADEMACHER),
        CoefficientLaw(LawKind.CENTERED_EXPONENTIAL),
        CoefficientLaw(LawKind.SCALED_STUDENT_T, df=10.0)]


class TestCoefficientLaw:
    @pytest.mark.parametrize("law", LAWS, ids=lambda law: law.label)
    def test_standardized_moments(self, law):
        draws = standardized_draw(law, 123, size=200_000)
        assert abs(draws.mean()) < 0.02
        assert draws.var() == pytest.approx(1.0, abs=0.05)

    def test_rademacher_values(self):
        draws = standardized_draw(CoefficientLaw(LawKind.RADEMACHER), 5, size=1000)
        assert set(np.unique(draws)) == {-1.0, 1.0}

    def test_student_needs_finite_variance(self):
        with pytest.raises(ParameterError):
            CoefficientLaw(LawKind.SCALED_STUDENT_T, df=2.0)

    def test_student_default_df(self):
        assert CoefficientLaw(LawKind.SCALED_STUDENT_T).df == 4.0

    def test_parse_aliases(self):
        assert CoefficientLaw.parse("bernoulli").kind is LawKind.RADEMACHER
        assert CoefficientLaw.parse("exponential").kind is LawKind.CENTERED_EXPONENTIAL
        assert CoefficientLaw.parse("t", 5).label == "scaled_student_t(df=5)"

    def test_single_draw_is_float(self):
        assert isinstance(standardized_draw(CoefficientLaw(), 1), float)


class TestCoefficientStream:
    def test_deterministic(self):
        law = CoefficientLaw()
        np.testing.assert_array_equal(kl_coefficients(law, 9, 500), kl_coefficients(law, 9, 500))

    def test_prefix_shared_across_truncations(self):
        law = CoefficientLaw(LawKind.CENTERED_EXPONENTIAL)
        np.testing.assert_array_equal(kl_coefficients(law, 7, 300),
                                      kl_coefficients(law, 7, 10201)[:300])

    def test_seeds_differ(self):
        law = CoefficientLaw()
        assert not np.array_equal(kl_coefficients(law, 1, 50), kl_coefficients(law, 2, 50))


class TestKarhunenLoeve:
    def test_pointwise_variance_is_kernel_diagonal(self):
        params = SpectralParams(3.0, 5.0, 2.0, NormalizationKind.UNIT_DIAGONAL)
        for ps, domain in ((regular_placement_sphere(25), Domain.SPHERE),
                           (uniform_grid_interval(25), Domain.INTERVAL)):
            sampler = KarhunenLoeveSampler(params, 20, ps)
            variance = np.sum((sampler.basis * sampler.amplitudes) ** 2, axis=1)
            kernel = TruncatedSpectralKernel(params, 20, domain)
            np.testing.assert_allclose(variance, kernel.diagonal(ps), rtol=1e-10)

    def test_sample_shape_and_reproducibility(self):
        ps = regular_placement_sphere(60)
        params = SpectralParams(5.0, 20.0, 1.0, NormalizationKind.UNIT_DIAGONAL)
        law = CoefficientLaw(LawKind.RADEMACHER)
        first = sample_kl(params, 10, law, ps, seed=42)
        second = sample_kl(params, 10, law, ps, seed=42)
        assert len(first.values) == len(ps)
        np.testing.assert_array_equal(first.values, second.values)
        assert first.truncation == 10
        assert first.method == "karhunen_loeve"

    def test_rejects_rough_parameters(self):
        with pytest.raises(ParameterError):
            KarhunenLoeveSampler(SpectralParams(0.9, 1.0), 10, regular_placement_sphere(10))

    def test_direct_gaussian_sample(self):
        ps = regular_placement_sphere(30)
        model = TruncatedSpectralKernel(SpectralParams(2.0, 1.0), 15, Domain.SPHERE)
        first = sample_gaussian_direct(model, ps, 3)
        np.testing.assert_array_equal(first.values, sample_gaussian_direct(model, ps, 3).values)
        assert first.method == "cholesky"
        assert first.metadata["variant"] == "spectral"

    @pytest.mark.slow
    def test_empirical_covariance_matches_kernel(self):
        ps = regular_placement_sphere(6)
        params = SpectralParams(2.0, 1.0, 1.0, NormalizationKind.UNIT_DIAGONAL)
        sampler = KarhunenLoeveSampler(params, 10, ps)
        law = CoefficientLaw(LawKind.CENTERED_EXPONENTIAL)
        draws = np.array([sampler.draw(law, seed).values for seed in range(3000)])
        empirical = draws.T @ draws / len(draws)
        kernel = TruncatedSpectralKernel(params, 10, Domain.SPHERE)
        np.testing.assert_allclose(empirical, kernel.gram(ps), atol=0.15)


@pytest.mark.slow
class TestGaussianCovariance:
    REPLICATIONS = 5000

    @pytest.fixture(scope="class")
    def setup(self):
        ps = regular_placement_sphere(10)
        params = SpectralParams(2.0, 1.0, 1.0, NormalizationKind.UNIT_DIAGONAL)
        kernel = TruncatedSpectralKernel(params, 10, Domain.SPHERE)
        K = kernel.gram(ps)
        diag = np.diag(K)
        # standard error of a mean-zero empirical covariance entry under the Gaussian law
        se = np.sqrt((np.outer(diag, diag) + K ** 2) / self.REPLICATIONS)
        sampler = KarhunenLoeveSampler(params, 10, ps)
        kl = np.array([sampler.draw(CoefficientLaw(), seed).values
                       for seed in range(self.REPLICATIONS)])
        direct = np.array([sample_gaussian_direct(kernel, ps, seed).values
                           for seed in range(self.REPLICATIONS)])
        return K, se, kl.T @ kl / len(kl), direct.T @ direct / len(direct)

    def test_karhunen_loeve_within_five_standard_errors(self, setup):
        K, se, kl, _ = setup
        assert np.all(np.abs(kl - K) <= 5.0 * se)

    def test_direct_within_five_standard_errors(self, setup):
        K, se, _, direct = setup
        assert np.all(np.abs(direct - K) <= 5.0 * se)

    def test_karhunen_loeve_agrees_with_direct(self, setup):
        _, se, kl, direct = setup
        assert np.all(np.abs(kl - direct) <= 5.0 * np.sqrt(2.0) * se)
