"""Smoothness, magnitude and range estimation by maximum likelihood"""

import math

import numpy as np
import pytest

from errors import EstimationFailedError, InvalidArgumentError, ParameterError
from estimator import (STATUS_INVALID, STATUS_OK, ObjectivePoint, OptimizerTrace,
                       estimate_magnitude, estimate_range_and_magnitude, estimate_smoothness,
                       golden_section_maximize, likelihood_profile, matern_family,
                       profiled_objective, range_family, search_grid, spectral_family,
                       wendland_family)
from geometry import Domain, regular_placement_sphere, uniform_grid_interval
from kernels import NormalizationKind, SpectralParams, TruncatedSpectralKernel
from likelihood import log_likelihood
from sampler import CoefficientLaw, sample_kl

TRUTH = SpectralParams(5.0, 20.0, 1.0, NormalizationKind.UNIT_DIAGONAL)


@pytest.fixture(scope="module")
def design():
    return regular_placement_sphere(100)


@pytest.fixture(scope="module")
def field(design):
    return sample_kl(TRUTH, 30, CoefficientLaw(), design, seed=1).values


class TestSearchGrid:
    def test_upper_end_included(self):
        grid = search_grid(1.0000001, 30.0, 0.25)
        assert grid[0] == 1.0000001
        assert grid[-1] == 30.0
        assert len(grid) == 117

    def test_degenerate_interval(self):
        assert search_grid(2.0, 2.0, 0.25) == [2.0]

    def test_empty_interval(self):
        with pytest.raises(InvalidArgumentError):
            search_grid(3.0, 2.0, 0.25)


class TestGoldenSection:
    def test_finds_quadratic_peak(self):
        trace = OptimizerTrace(tolerance=1e-6)

        def objective(x):
            return ObjectivePoint(x, -(x - 2.3) ** 2, STATUS_OK)

        best = golden_section_maximize(objective, 1.0, 4.0, 1e-6, trace)
        assert best.value == pytest.approx(2.3, abs=1e-6)
        widths = [b - a for a, b in trace.brackets]
        assert all(w2 < w1 for w1, w2 in zip(widths, widths[1:]))
        assert widths[-1] <= 1e-6


class TestMagnitude:
    def test_closed_form(self, design, field):
        model = TruncatedSpectralKernel(TRUTH.with_changes(sigma2=3.0), 30)
        K = TruncatedSpectralKernel(TRUTH, 30).gram(design)
        expected = field @ np.linalg.solve(K, field) / len(design)
        assert estimate_magnitude(model, design, field) == pytest.approx(expected, rel=1e-9)

    def test_zero_data(self, design):
        model = TruncatedSpectralKernel(TRUTH, 30)
        assert estimate_magnitude(model, design, np.zeros(len(design))) == 0.0

    def test_stationary_point_of_likelihood(self, design, field):
        model = TruncatedSpectralKernel(TRUTH, 30)
        sigma2 = estimate_magnitude(model, design, field)
        h = 1e-4 * sigma2

        def ell(value):
            return log_likelihood(model.with_sigma2(value), design, field).loglik

        derivative = (ell(sigma2 + h) - ell(sigma2 - h)) / (2 * h)
        scale = len(design) / (2 * sigma2)
        assert abs(derivative) / scale <= 1e-6


class TestEstimateSmoothness:
    def test_zero_data_fails_when_profiled(self, design):
        family = spectral_family(20.0, 30, profile_magnitude=True)
        with pytest.raises(EstimationFailedError):
            estimate_smoothness(family, design, np.zeros(len(design)), (1.5, 4.0), 0.5)

    def test_lower_bound_must_exceed_half_dimension(self, design, field):
        with pytest.raises(ParameterError):
            estimate_smoothness(spectral_family(20.0, 30), design, field, (1.0, 5.0))

    def test_interval_above_truth_stops_at_lower_end(self):
        ps = regular_placement_sphere(300)
        u = sample_kl(TRUTH, 30, CoefficientLaw(), ps, seed=3).values
        result = estimate_smoothness(spectral_family(20.0, 30), ps, u, (6.0, 12.0))
        assert result.boundary
        assert result.s_hat == pytest.approx(6.0, abs=1e-4)

    def test_boundary_flag(self, design, field):
        result = estimate_smoothness(spectral_family(20.0, 30), design, field, (1.5, 2.0))
        assert result.boundary
        assert result.s_hat == pytest.approx(2.0, abs=1e-4)

    def test_estimate_inside_interval(self, design, field):
        result = estimate_smoothness(spectral_family(20.0, 30), design, field, (1.5, 9.0),
                                     grid_step=0.5, tolerance=1e-3)
        assert 1.5 <= result.s_hat <= 9.0
        assert result.trace.brackets[-1][1] - result.trace.brackets[-1][0] <= 1e-3
        best_grid = max(p.loglik for p in result.trace.grid if p.status == STATUS_OK)
        assert result.loglik >= best_grid
        assert result.microergodic == pytest.approx(result.sigma2_hat * TruncatedSpectralKernel(
            TRUTH.with_changes(s=result.s_hat), 30).v)

    def test_profiled_estimate_invariant_to_data_scale(self, design, field):
        family = spectral_family(20.0, 30, profile_magnitude=True)
        first = estimate_smoothness(family, design, field, (1.5, 9.0), grid_step=0.5)
        scaled = estimate_smoothness(family, design, 3.0 * field, (1.5, 9.0), grid_step=0.5)
        assert scaled.s_hat == first.s_hat
        assert [p.value for p in scaled.trace.grid] == [p.value for p in first.trace.grid]
        assert [p.status for p in scaled.trace.grid] == [p.status for p in first.trace.grid]
        assert scaled.trace.brackets == first.trace.brackets
        assert scaled.sigma2_hat == pytest.approx(9.0 * first.sigma2_hat, rel=1e-9)

    def test_parallel_grid_matches_serial(self, design, field):
        family = spectral_family(20.0, 30)
        serial = estimate_smoothness(family, design, field, (1.5, 6.0), grid_step=0.5)
        threaded = estimate_smoothness(family, design, field, (1.5, 6.0), grid_step=0.5,
                                       workers=3)
        assert threaded.s_hat == serial.s_hat

    def test_euclidean_families(self, design, field):
        for family in (matern_family(20.0), wendland_family(1.0)):
            result = estimate_smoothness(family, design, field, (1.6, 6.0), grid_step=0.5,
                                         tolerance=1e-2)
            assert 1.6 <= result.s_hat <= 6.0
            assert result.sigma2_hat > 0

    @pytest.mark.slow
    def test_recovers_true_smoothness(self):
        ps = regular_placement_sphere(500)
        u = sample_kl(TRUTH, 100, CoefficientLaw(), ps, seed=1).values
        result = estimate_smoothness(spectral_family(20.0, 100), ps, u)
        assert abs(result.s_hat - 5.0) <= 0.5


class TestRangeAndMagnitude:
    def test_degenerate_bounds_reduce_to_magnitude(self, design):
        truth = SpectralParams(5.0, 20.0)
        u = sample_kl(truth, 30, CoefficientLaw(), design, seed=4).values
        result = estimate_range_and_magnitude(range_family(5.0, 30), design, u, (20.0, 20.0))
        expected = estimate_magnitude(TruncatedSpectralKernel(truth, 30), design, u)
        assert result.tau_hat == 20.0
        assert result.sigma2_hat == pytest.approx(expected, rel=1e-12)
        assert result.microergodic == pytest.approx(expected * 20.0 ** -4, rel=1e-12)

    def test_interior_data_gives_positive_microergodic(self, design):
        truth = SpectralParams(5.0, 20.0)
        u = sample_kl(truth, 30, CoefficientLaw(), design, seed=5).values
        result = estimate_range_and_magnitude(range_family(5.0, 30), design, u, (1.0, 30.0),
                                              grid_points=12, tolerance=1e-2)
        assert 1.0 <= result.tau_hat <= 30.0
        assert result.microergodic > 0
        assert math.isfinite(result.microergodic)

    def test_bounds_below_one(self, design, field):
        with pytest.raises(InvalidArgumentError):
            estimate_range_and_magnitude(range_family(5.0, 30), design, field, (0.5, 2.0))


class TestLikelihoodProfile:
    def test_rows_in_grid_order_with_invalid_marked(self, design, field):
        family = spectral_family(20.0, 30)
        table = likelihood_profile(family, design, field, [0.9, 3.0, 5.0])
        assert list(table.columns) == ["s", "loglik", "sigma2_hat", "status"]
        assert list(table["s"]) == [0.9, 3.0, 5.0]
        assert table["status"].iloc[0] == STATUS_INVALID
        assert list(table["status"].iloc[1:]) == [STATUS_OK, STATUS_OK]

    def test_single_row_equals_log_likelihood(self, design, field):
        table = likelihood_profile(spectral_family(20.0, 30), design, field, [5.0])
        expected = log_likelihood(TruncatedSpectralKernel(TRUTH, 30), design, field).loglik
        assert table["loglik"].iloc[0] == pytest.approx(expected, rel=1e-12)

    def test_profiled_objective_on_interval(self):
        ps = uniform_grid_interval(30)
        params = SpectralParams(2.0, 1.0, 1.0, NormalizationKind.UNIT_DIAGONAL)
        u = sample_kl(params, 60, CoefficientLaw(), ps, seed=2).values
        family = spectral_family(1.0, 60, Domain.INTERVAL, profile_magnitude=True)
        point = profiled_objective(family, ps, u, 2.0)
        assert point.status == STATUS_OK
        assert point.sigma2_hat > 0
