#!/usr/bin/env python3
"""
Domain Geometry
Unit sphere and Dirichlet interval (0, pi): points, distances,
quasi-uniform designs and design diagnostics (fill distance,
separation radius, mesh ratio)
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from errors import (DegenerateDesignError, DomainMismatchError,
                    DuplicatePointsError, InvalidArgumentError)

LOGGER = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-12
DUPLICATE_TOLERANCE = 1e-12
DEFAULT_RESOLUTION_FACTOR = 10


class Domain(str, Enum):
    SPHERE = "sphere"
    INTERVAL = "interval"

    @property
    def dimension(self):
        """Intrinsic dimension d"""
        return 2 if self is Domain.SPHERE else 1


@dataclass(frozen=True)
class DomainPoint:
    """Single point x in M: unit 3-vector on the sphere, scalar on (0, pi)"""

    domain: Domain
    coords: tuple

    def __post_init__(self):
        domain = Domain(self.domain)
        object.__setattr__(self, "domain", domain)
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        object.__setattr__(self, "coords", coords)

        if domain is Domain.SPHERE:
            if len(coords) != 3:
                raise InvalidArgumentError("Sphere points need three coordinates")
            norm = math.sqrt(sum(c * c for c in coords))
            if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
                raise InvalidArgumentError(f"Sphere point has norm {norm!r}, expected 1")
        else:
            if len(coords) != 1:
                raise InvalidArgumentError("Interval points need one coordinate")
            if not 0.0 < coords[0] < math.pi:
                raise InvalidArgumentError(f"Interval point {coords[0]!r} outside (0, pi)")

    @classmethod
    def on_sphere(cls, vector):
        """Project a nonzero 3-vector onto the unit sphere"""
        v = np.asarray(vector, dtype=float)
        return cls(Domain.SPHERE, tuple(v / np.linalg.norm(v)))

    @classmethod
    def on_interval(cls, x):
        return cls(Domain.INTERVAL, (float(x),))

    def as_array(self):
        return np.array(self.coords)


def geodesic_distance(a, b):
    """
    Riemannian distance between two points of the same domain

    Args:
        a, b (DomainPoint): Points on the same domain

    Returns:
        float: great-circle angle on the sphere, |a - b| on the interval
    """
    if a.domain is not b.domain:
        raise DomainMismatchError(f"Cannot measure {a.domain.value} against {b.domain.value}")
    if a.domain is Domain.SPHERE:
        dot = float(np.dot(a.as_array(), b.as_array()))
        # clamp: rounding pushes |dot| past 1 at coincident/antipodal points
        return math.acos(min(1.0, max(-1.0, dot)))
    return abs(a.coords[0] - b.coords[0])


def geodesic_matrix(domain, left, right):
    """Pairwise geodesic distances between coordinate arrays"""
    if Domain(domain) is Domain.SPHERE:
        return np.arccos(np.clip(left @ right.T, -1.0, 1.0))
    return np.abs(left.reshape(-1, 1) - right.reshape(1, -1))


def chordal_to_geodesic(chord):
    """Great-circle angle from the ambient chord length on the unit sphere"""
    return 2.0 * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))


@dataclass(frozen=True)
class DesignDiagnostics:
    fill_distance: float
    separation_radius: float
    mesh_ratio: float
    candidate_resolution: int


class PointSet:
    """Ordered, pairwise distinct design x = (x_1, ..., x_n) on one domain"""

    def __init__(self, domain, coords, label=None):
        self.domain = Domain(domain)
        coords = np.asarray(coords, dtype=float)
        if self.domain is Domain.SPHERE:
            coords = coords.reshape(-1, 3)
        else:
            coords = coords.reshape(-1)
        coords.setflags(write=False)
        self.coords = coords
        self.label = label

    @classmethod
    def from_points(cls, points, label=None):
        """Build a design from DomainPoint objects"""
        points = list(points)
        if not points:
            raise InvalidArgumentError("A design needs at least one point")
        domain = points[0].domain
        if any(p.domain is not domain for p in points):
            raise DomainMismatchError("All design points must share one domain")
        return cls(domain, [p.coords if domain is Domain.SPHERE else p.coords[0]
                            for p in points], label=label)

    def __len__(self):
        return self.coords.shape[0]

    def __getitem__(self, index):
        if self.domain is Domain.SPHERE:
            return DomainPoint(self.domain, tuple(self.coords[index]))
        return DomainPoint(self.domain, (self.coords[index],))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def ambient(self):
        """Coordinates as an (n, k) array in the ambient space"""
        if self.domain is Domain.SPHERE:
            return self.coords
        return self.coords.reshape(-1, 1)

    def subset(self, count):
        """Leading `count` points, keeping their order"""
        return PointSet(self.domain, self.coords[:count], label=self.label)

    def append(self, point):
        if point.domain is not self.domain:
            raise DomainMismatchError("Point and design live on different domains")
        coords = np.concatenate([self.ambient, point.as_array().reshape(1, -1)])
        return PointSet(self.domain, coords, label=self.label)

    @cached_property
    def inner_products(self):
        """Matrix of <x_i, x_j> (sphere only); shared by spectral Gram matrices"""
        if self.domain is not Domain.SPHERE:
            raise DomainMismatchError("Inner products are defined for sphere designs")
        return np.clip(self.coords @ self.coords.T, -1.0, 1.0)

    @cached_property
    def geodesic_distances(self):
        return geodesic_matrix(self.domain, self.coords, self.coords)

    @cached_property
    def chordal_distances(self):
        ambient = self.ambient
        sq = np.sum(ambient ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * ambient @ ambient.T
        np.fill_diagonal(d2, 0.0)
        return np.sqrt(np.maximum(d2, 0.0))

    @cached_property
    def _tree(self):
        return cKDTree(self.ambient)

    def has_duplicates(self, tolerance=DUPLICATE_TOLERANCE):
        return bool(self._tree.query_pairs(r=tolerance))

    def require_distinct(self):
        if len(self) > 1 and self.has_duplicates():
            raise DuplicatePointsError("Design contains coincident points")

    @cached_property
    def separation_radius(self):
        """q_x = half the minimal pairwise distance (exact)"""
        if len(self) < 2:
            raise DegenerateDesignError("Separation radius needs at least two points")
        nearest, _ = self._tree.query(self.ambient, k=2)
        chord = float(np.min(nearest[:, 1]))
        if self.domain is Domain.SPHERE:
            return float(chordal_to_geodesic(chord)) / 2.0
        return chord / 2.0

    @cached_property
    def boundary_separation(self):
        """Separation radius including the distance to the interval boundary"""
        if self.domain is not Domain.INTERVAL:
            return self.separation_radius
        to_boundary = float(np.min(np.minimum(self.coords, math.pi - self.coords)))
        if len(self) < 2:
            return to_boundary
        return min(self.separation_radius, to_boundary)

    def fill_distance(self, candidate_resolution):
        """Approximate h_x as the largest nearest-design distance over candidates"""
        candidates = candidate_design(self.domain, candidate_resolution)
        chord, _ = self._tree.query(candidates.ambient, k=1)
        if self.domain is Domain.SPHERE:
            return float(np.max(chordal_to_geodesic(chord)))
        return float(np.max(chord))


def candidate_design(domain, resolution):
    """Dense candidate set used to approximate fill distances"""
    if Domain(domain) is Domain.SPHERE:
        return regular_placement_sphere(resolution)
    return PointSet(Domain.INTERVAL, np.linspace(0.0, math.pi, int(resolution)))


def _round_half_up(value):
    return int(math.floor(value + 0.5))


def regular_placement_sphere(n_requested):
    """
    Deserno's regular placement: latitude bands of height ~sqrt(4 pi / n),
    each filled with points spaced ~d_theta / sin(theta)

    Args:
        n_requested (int): Target number of points

    Returns:
        PointSet: deterministic design; its size is the construction's
        natural count, close to n_requested
    """
    if n_requested < 1:
        raise InvalidArgumentError("regular placement needs n_requested >= 1")
    if n_requested == 1:
        return PointSet(Domain.SPHERE, [[0.0, 0.0, 1.0]], label="deserno-1")

    area = 4.0 * math.pi / n_requested
    spacing = math.sqrt(area)
    bands = max(1, _round_half_up(math.pi / spacing))
    d_theta = math.pi / bands
    d_phi = area / d_theta

    points = []
    for m in range(bands):
        theta = math.pi * (m + 0.5) / bands
        count = max(1, _round_half_up(2.0 * math.pi * math.sin(theta) / d_phi))
        for k in range(count):
            phi = 2.0 * math.pi * k / count
            points.append((math.sin(theta) * math.cos(phi),
                           math.sin(theta) * math.sin(phi),
                           math.cos(theta)))

    design = PointSet(Domain.SPHERE, points, label=f"deserno-{n_requested}")
    LOGGER.debug("Deserno placement: requested %d, returned %d", n_requested, len(design))
    return design


def uniform_grid_interval(n):
    """Interior equispaced grid x_i = pi * i / (n + 1), i = 1..n"""
    if n < 1:
        raise InvalidArgumentError("interval grid needs n >= 1")
    grid = math.pi * np.arange(1, n + 1) / (n + 1)
    return PointSet(Domain.INTERVAL, grid, label=f"grid-{n}")


def quasi_uniform_design(domain, n):
    """Default quasi-uniform design per domain"""
    if Domain(domain) is Domain.SPHERE:
        return regular_placement_sphere(n)
    return uniform_grid_interval(n)


def random_design(domain, n, seed):
    """Uniformly random design (exploration only, not quasi-uniform)"""
    if n < 1:
        raise InvalidArgumentError("random design needs n >= 1")
    rng = np.random.default_rng(seed)
    if Domain(domain) is Domain.SPHERE:
        raw = rng.standard_normal((n, 3))
        return PointSet(Domain.SPHERE, raw / np.linalg.norm(raw, axis=1, keepdims=True),
                        label=f"random-{n}")
    return PointSet(Domain.INTERVAL, np.sort(rng.uniform(0.0, math.pi, n)), label=f"random-{n}")


def design_diagnostics(ps, candidate_resolution=None):
    """
    Fill distance, separation radius and mesh ratio of a design

    Args:
        ps (PointSet): Design with at least two points
        candidate_resolution (int): Size of the candidate set for h_x,
            at least 10 * len(ps); defaults to that minimum

    Returns:
        DesignDiagnostics
    """
    if len(ps) < 2:
        raise DegenerateDesignError("Design diagnostics need at least two points")
    minimum = DEFAULT_RESOLUTION_FACTOR * len(ps)
    if candidate_resolution is None:
        candidate_resolution = minimum
    if candidate_resolution < minimum:
        raise InvalidArgumentError(
            f"candidate_resolution {candidate_resolution} below 10 * n = {minimum}")

    q = ps.separation_radius
    h = ps.fill_distance(candidate_resolution)
    return DesignDiagnostics(fill_distance=h, separation_radius=q,
                             mesh_ratio=h / q, candidate_resolution=int(candidate_resolution))
