#!/usr/bin/env python3
"""
Spectral Toolkit
Eigenpairs of the Laplace-Beltrami operator on the sphere and of the
Dirichlet Laplacian on (0, pi); Legendre polynomials and real
spherical harmonics
"""

import math
from dataclasses import dataclass, field

import numpy as np

from errors import DomainMismatchError, InvalidArgumentError
from geometry import Domain

LEGENDRE_ARGUMENT_SLACK = 1e-12
MIN_WEYL_COUNT = 10


@dataclass(frozen=True)
class EigenSystem:
    """
    Eigenvalues lambda_1 <= lambda_2 <= ... ordered with multiplicity

    `domain` is None for synthetic Weyl sequences of arbitrary dimension.
    On the sphere every index carries its (degree l, order m).
    """

    dimension: int
    eigenvalues: np.ndarray
    domain: Domain = None
    degrees: np.ndarray = field(default=None, repr=False)
    orders: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return int(self.eigenvalues.shape[0])

    def head(self, count):
        """First `count` eigenvalues (1-based indices 1..count)"""
        if count > len(self):
            raise InvalidArgumentError(f"Eigen system holds {len(self)} values, {count} requested")
        return self.eigenvalues[:count]


def sphere_eigensystem(degree):
    """lambda = l(l+1) repeated 2l+1 times, l = 0..degree: (degree+1)^2 entries"""
    if degree < 0:
        raise InvalidArgumentError("Truncation degree must be >= 0")
    degrees = np.repeat(np.arange(degree + 1), 2 * np.arange(degree + 1) + 1)
    orders = np.concatenate([np.arange(-l, l + 1) for l in range(degree + 1)])
    eigenvalues = (degrees * (degrees + 1)).astype(float)
    return EigenSystem(2, eigenvalues, Domain.SPHERE, degrees, orders)


def interval_eigensystem(count):
    """Dirichlet eigenvalues lambda_i = i^2 on (0, pi), i = 1..count"""
    if count < 1:
        raise InvalidArgumentError("Interval eigen system needs count >= 1")
    index = np.arange(1, count + 1, dtype=float)
    return EigenSystem(1, index ** 2, Domain.INTERVAL)


def weyl_eigensystem(dimension, count):
    """Synthetic Weyl-exact sequence lambda_i = i^(2/d) for any dimension d"""
    if dimension < 1 or count < 1:
        raise InvalidArgumentError("Synthetic eigen system needs dimension >= 1 and count >= 1")
    index = np.arange(1, count + 1, dtype=float)
    return EigenSystem(int(dimension), index ** (2.0 / dimension), None)


def eigensystem_for(dimension, count):
    """
    Eigen system with at least `count` entries for the given dimension

    d = 1 and d = 2 use the implemented domains; other dimensions fall
    back to synthetic Weyl sequences.
    """
    if dimension == 2:
        return sphere_eigensystem(int(math.ceil(math.sqrt(count))) - 1)
    if dimension == 1:
        return interval_eigensystem(count)
    return weyl_eigensystem(dimension, count)


def _check_legendre_argument(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + LEGENDRE_ARGUMENT_SLACK):
        raise InvalidArgumentError("Legendre argument must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def legendre_table(degree, t):
    """
    P_0..P_degree at t via (l+1)P_{l+1} = (2l+1) t P_l - l P_{l-1}

    Returns:
        np.ndarray of shape (degree + 1,) + t.shape
    """
    t = _check_legendre_argument(t)
    table = np.empty((degree + 1,) + t.shape)
    table[0] = 1.0
    if degree >= 1:
        table[1] = t
    for l in range(1, degree):
        table[l + 1] = ((2 * l + 1) * t * table[l] - l * table[l - 1]) / (l + 1)
    return table


def legendre_P(l, t):
    """Legendre polynomial P_l(t) for |t| <= 1"""
    if l < 0:
        raise InvalidArgumentError("Legendre degree must be >= 0")
    value = legendre_table(l, t)[l]
    return float(value) if np.ndim(value) == 0 else value


def _normalized_associated_legendre(degree, cos_theta, sin_theta):
    """
    Fully normalized p[l, m] = N_lm P_l^m(cos theta), no Condon-Shortley phase,
    with N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)
    """
    p = np.zeros((degree + 1, degree + 1) + cos_theta.shape)
    p[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, degree + 1):
        p[m, m] = math.sqrt((2 * m + 1) / (2.0 * m)) * sin_theta * p[m - 1, m - 1]
    for m in range(degree):
        p[m + 1, m] = math.sqrt(2 * m + 3) * cos_theta * p[m, m]
    for m in range(degree + 1):
        for l in range(m + 2, degree + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p[l, m] = a * (cos_theta * p[l - 1, m] - b * p[l - 2, m])
    return p


def _spherical_angles(coords):
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    x, y, z = coords[:, 0], coords[:, 1], coords[:, 2]
    return np.clip(z, -1.0, 1.0), np.hypot(x, y), np.arctan2(y, x)


def harmonic_index(l, m):
    """Position of Y_lm in the basis order (increasing l, then m = -l..l)"""
    return l * l + l + m


def spherical_harmonic_basis(degree, coords):
    """
    Real spherical harmonics Y_lm for l <= degree at every point

    Args:
        degree (int): Truncation degree L
        coords (np.ndarray): (n, 3) unit vectors

    Returns:
        np.ndarray: (n, (L+1)^2) matrix, columns in basis order
    """
    cos_theta, sin_theta, phi = _spherical_angles(coords)
    p = _normalized_associated_legendre(degree, cos_theta, sin_theta)
    basis = np.empty((cos_theta.shape[0], (degree + 1) ** 2))
    root2 = math.sqrt(2.0)
    for l in range(degree + 1):
        basis[:, harmonic_index(l, 0)] = p[l, 0]
        for m in range(1, l + 1):
            basis[:, harmonic_index(l, m)] = root2 * p[l, m] * np.cos(m * phi)
            basis[:, harmonic_index(l, -m)] = root2 * p[l, m] * np.sin(m * phi)
    return basis


def real_spherical_harmonic(l, m, x):
    """
    Real spherical harmonic Y_lm(x), orthonormal in L2(S^2)

    m > 0 uses sqrt(2) N P_l^m cos(m phi), m < 0 uses sqrt(2) N P_l^|m| sin(|m| phi)
    """
    if l < 0 or abs(m) > l:
        raise InvalidArgumentError(f"Need |m| <= l, got l={l}, m={m}")
    if x.domain is not Domain.SPHERE:
        raise DomainMismatchError("Spherical harmonics need a sphere point")
    cos_theta, sin_theta, phi = _spherical_angles(x.as_array())
    p = _normalized_associated_legendre(l, cos_theta, sin_theta)[l, abs(m)][0]
    if m == 0:
        return float(p)
    if m > 0:
        return float(math.sqrt(2.0) * p * math.cos(m * phi[0]))
    return float(math.sqrt(2.0) * p * math.sin(-m * phi[0]))


def interval_basis(count, x):
    """e_i(x) = sqrt(2/pi) sin(i x), i = 1..count, as an (n, count) matrix"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    index = np.arange(1, count + 1)
    return math.sqrt(2.0 / math.pi) * np.sin(np.outer(x, index))


def interval_eigenfunction(i, x):
    """Dirichlet eigenfunction e_i(x) = sqrt(2/pi) sin(i x) on (0, pi)"""
    if i < 1:
        raise InvalidArgumentError("Interval eigenfunction index must be >= 1")
    value = math.sqrt(2.0 / math.pi) * np.sin(i * np.asarray(x, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def weyl_check(es, count):
    """
    Empirical Weyl constants: min and max of (1 + lambda_i) / i^(2/d), 2 <= i <= count

    Returns:
        tuple: (c_hat, C_hat)
    """
    if count < MIN_WEYL_COUNT:
        raise InvalidArgumentError(f"weyl_check needs count >= {MIN_WEYL_COUNT}")
    eigenvalues = es.head(count)
    index = np.arange(1, count + 1, dtype=float)
    ratio = (1.0 + eigenvalues[1:]) / index[1:] ** (2.0 / es.dimension)
    return float(np.min(ratio)), float(np.max(ratio))
