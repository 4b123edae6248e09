"""Points, distances, designs and design diagnostics on the sphere and interval"""

import math

import numpy as np
import pytest

from errors import (DegenerateDesignError, DomainMismatchError, DuplicatePointsError,
                    InvalidArgumentError)
from geometry import (Domain, DomainPoint, PointSet, design_diagnostics, geodesic_distance,
                      quasi_uniform_design, random_design, regular_placement_sphere,
                      uniform_grid_interval)


class TestDomainPoint:
    def test_unit_vector_accepted(self):
        p = DomainPoint(Domain.SPHERE, (0.0, 0.0, 1.0))
        assert p.coords == (0.0, 0.0, 1.0)

    def test_norm_off_by_more_than_tolerance_rejected(self):
        with pytest.raises(InvalidArgumentError):
            DomainPoint(Domain.SPHERE, (1.01, 0.0, 0.0))

    def test_on_sphere_normalizes(self):
        p = DomainPoint.on_sphere((3.0, 4.0, 0.0))
        np.testing.assert_allclose(p.coords, (0.6, 0.8, 0.0), atol=1e-15)

    @pytest.mark.parametrize("x", [0.0, math.pi, -0.1, 4.0])
    def test_interval_boundary_and_outside_rejected(self, x):
        with pytest.raises(InvalidArgumentError):
            DomainPoint.on_interval(x)

    def test_interval_needs_one_coordinate(self):
        with pytest.raises(InvalidArgumentError):
            DomainPoint(Domain.INTERVAL, (0.5, 0.6))


class TestGeodesicDistance:
    def test_orthogonal_vectors(self):
        a = DomainPoint.on_sphere((1, 0, 0))
        b = DomainPoint.on_sphere((0, 1, 0))
        assert geodesic_distance(a, b) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_identity_and_antipodes(self):
        a = DomainPoint.on_sphere((1, 0, 0))
        assert geodesic_distance(a, a) == 0.0
        assert geodesic_distance(a, DomainPoint.on_sphere((-1, 0, 0))) == pytest.approx(math.pi)

    def test_interval_absolute_difference(self):
        a, b = DomainPoint.on_interval(0.5), DomainPoint.on_interval(2.0)
        assert geodesic_distance(a, b) == pytest.approx(1.5)
        assert geodesic_distance(b, a) == geodesic_distance(a, b)

    def test_mismatched_domains(self):
        with pytest.raises(DomainMismatchError):
            geodesic_distance(DomainPoint.on_sphere((0, 0, 1)), DomainPoint.on_interval(1.0))

    def test_triangle_inequality_on_random_triples(self):
        points = list(random_design(Domain.SPHERE, 300, seed=11))
        for i in range(0, 300, 3):
            a, b, c = points[i:i + 3]
            assert geodesic_distance(a, c) <= (geodesic_distance(a, b)
                                               + geodesic_distance(b, c) + 1e-10)
            assert geodesic_distance(a, b) <= math.pi


class TestPointSet:
    def test_duplicates_detected(self):
        ps = PointSet(Domain.SPHERE, [[1, 0, 0], [0, 1, 0], [1, 0, 0]])
        assert ps.has_duplicates()
        with pytest.raises(DuplicatePointsError):
            ps.require_distinct()

    def test_from_points_rejects_mixed_domains(self):
        with pytest.raises(DomainMismatchError):
            PointSet.from_points([DomainPoint.on_sphere((0, 0, 1)), DomainPoint.on_interval(1.0)])

    def test_subset_and_append_keep_order(self):
        ps = uniform_grid_interval(5)
        longer = ps.subset(2).append(DomainPoint.on_interval(3.0))
        np.testing.assert_allclose(longer.coords, [ps.coords[0], ps.coords[1], 3.0])

    def test_geodesic_matrix_matches_pairwise(self):
        ps = random_design(Domain.SPHERE, 6, seed=3)
        D = ps.geodesic_distances
        assert D[1, 4] == pytest.approx(geodesic_distance(ps[1], ps[4]), abs=1e-12)


class TestRegularPlacement:
    def test_single_point_is_north_pole(self):
        ps = regular_placement_sphere(1)
        np.testing.assert_array_equal(ps.coords, [[0.0, 0.0, 1.0]])

    def test_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            regular_placement_sphere(0)

    def test_count_close_to_request(self):
        ps = regular_placement_sphere(1000)
        assert 900 <= len(ps) <= 1100
        assert ps.separation_radius > 0
        np.testing.assert_allclose(np.linalg.norm(ps.coords, axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("n", [100, 250, 1000])
    def test_count_within_ten_percent(self, n):
        assert abs(len(regular_placement_sphere(n)) - n) <= 0.1 * n

    def test_deterministic(self):
        np.testing.assert_array_equal(regular_placement_sphere(400).coords,
                                      regular_placement_sphere(400).coords)

    def test_points_distinct(self):
        regular_placement_sphere(500).require_distinct()

    def test_quasi_uniform_scaling(self):
        scaled = []
        for n in (100, 400, 1600):
            ps = regular_placement_sphere(n)
            diag = design_diagnostics(ps, 40 * len(ps))
            assert diag.mesh_ratio <= 3.0
            scaled.append(diag.fill_distance * math.sqrt(len(ps)))
        assert max(scaled) / min(scaled) < 2.0


class TestUniformGridInterval:
    def test_small_grids(self):
        np.testing.assert_allclose(uniform_grid_interval(1).coords, [math.pi / 2])
        np.testing.assert_allclose(uniform_grid_interval(3).coords,
                                   [math.pi / 4, math.pi / 2, 3 * math.pi / 4])

    def test_boundary_separation(self):
        ps = uniform_grid_interval(9)
        assert ps.boundary_separation == pytest.approx(math.pi / 20, rel=1e-12)

    def test_mesh_ratio_two(self):
        ps = uniform_grid_interval(9)
        diag = design_diagnostics(ps, 1000)
        assert diag.fill_distance == pytest.approx(math.pi / 10, rel=1e-12)
        assert diag.mesh_ratio == pytest.approx(2.0, rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            uniform_grid_interval(0)


class TestDesignDiagnostics:
    def test_antipodal_pair(self):
        ps = PointSet(Domain.SPHERE, [[0, 0, 1], [0, 0, -1]])
        diag = design_diagnostics(ps, 4000)
        assert diag.separation_radius == pytest.approx(math.pi / 2, abs=1e-12)
        assert diag.fill_distance <= math.pi / 2 + 1e-12
        assert diag.fill_distance == pytest.approx(math.pi / 2, abs=0.05)

    def test_single_point_is_degenerate(self):
        with pytest.raises(DegenerateDesignError):
            design_diagnostics(regular_placement_sphere(1))

    def test_resolution_below_ten_n(self):
        with pytest.raises(InvalidArgumentError):
            design_diagnostics(regular_placement_sphere(100), 500)

    def test_default_resolution(self):
        ps = quasi_uniform_design(Domain.INTERVAL, 20)
        assert design_diagnostics(ps).candidate_resolution == 200

    def test_refinement_moves_fill_distance_little(self):
        ps = regular_placement_sphere(400)
        coarse = ps.fill_distance(10 * len(ps))
        fine = ps.fill_distance(40 * len(ps))
        assert fine <= 1.15 * coarse
