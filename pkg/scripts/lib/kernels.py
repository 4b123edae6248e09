#!/usr/bin/env python3
"""
Covariance Kernels
Truncated spectral Whittle-Matern kernels on the sphere and interval,
Euclidean Matern and generalized Wendland kernels restricted through the
ambient (chordal) distance, and least-squares fitting of the auxiliary
parameters of a candidate family to a target covariance
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate, optimize, special

from errors import (DivergenceError, DomainMismatchError, InvalidArgumentError,
                    ParameterError)
from geometry import Domain, PointSet
from spectral import interval_basis

LOGGER = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 100
TAIL_DIRECT_TERMS = 100_000
MATERN_SMALL_ARGUMENT = 1e-10
WENDLAND_JACOBI_NODES = 48
WENDLAND_JACOBI_SWITCH = 0.05
WENDLAND_QUAD_TOLERANCE = 1e-12
FIT_GRID_POINTS = 121
CHORDAL_DIAMETER = 2.0


class NormalizationKind(str, Enum):
    POWER = "power"                  # v(theta) = tau^(-s + d/2)
    UNIT_DIAGONAL = "unit_diagonal"  # K(x, x) = 1 on the sphere
    NONE = "none"                    # v = 1


@dataclass(frozen=True)
class SpectralParams:
    """theta = (s, tau) with magnitude sigma^2 and the normalization v(theta)"""

    s: float
    tau: float
    sigma2: float = 1.0
    normalization: NormalizationKind = NormalizationKind.POWER

    def __post_init__(self):
        object.__setattr__(self, "normalization", NormalizationKind(self.normalization))
        if not self.tau > 0:
            raise ParameterError(f"Range scale tau must be > 0, got {self.tau!r}")
        if not self.sigma2 > 0:
            raise ParameterError(f"Magnitude sigma2 must be > 0, got {self.sigma2!r}")

    def validate(self, dimension):
        if not self.s > dimension / 2.0:
            raise ParameterError(
                f"Smoothness s={self.s!r} must exceed d/2 = {dimension / 2.0}")
        return self

    def power_factor(self, dimension):
        return self.tau ** (-self.s + dimension / 2.0)

    def with_changes(self, **changes):
        return replace(self, **changes)


def spectral_coefficients(params, truncation, domain):
    """
    Series weights before normalization

    Sphere: (2l+1)/(4 pi) (tau + l(l+1))^(-s), l = 0..L (addition theorem)
    Interval: (tau + i^2)^(-s), i = 1..L
    """
    if truncation < 0:
        raise InvalidArgumentError("Truncation degree must be >= 0")
    if Domain(domain) is Domain.SPHERE:
        l = np.arange(truncation + 1, dtype=float)
        return (2.0 * l + 1.0) / (4.0 * math.pi) * (params.tau + l * (l + 1.0)) ** (-params.s)
    if truncation < 1:
        raise InvalidArgumentError("Interval kernels need at least one mode")
    i = np.arange(1, truncation + 1, dtype=float)
    return (params.tau + i * i) ** (-params.s)


def normalization_factor(params, truncation, domain):
    """v(theta) for the chosen normalization kind"""
    domain = Domain(domain)
    kind = params.normalization
    if kind is NormalizationKind.NONE:
        return 1.0
    if kind is NormalizationKind.POWER:
        return params.power_factor(domain.dimension)
    total = float(np.sum(spectral_coefficients(params, truncation, domain)))
    if domain is Domain.SPHERE:
        return 1.0 / total
    # interval diagonal is not constant: normalize its mean over (0, pi)
    return math.pi / total


class KernelModel(ABC):
    """Common evaluation interface of every covariance kernel"""

    variant = "abstract"

    @property
    @abstractmethod
    def sigma2(self):
        ...

    @abstractmethod
    def with_sigma2(self, sigma2):
        """Same kernel with another magnitude"""

    @abstractmethod
    def smoothness(self, dimension):
        """Sobolev order s of the RKHS on a d-dimensional domain"""

    @abstractmethod
    def cross(self, left, right):
        """Covariance matrix K(left_i, right_j) between two designs"""

    def gram(self, ps):
        return self.cross(ps, ps)

    def diagonal(self, ps):
        return np.array([self.evaluate(p, p) for p in ps])

    def evaluate(self, a, b):
        if a.domain is not b.domain:
            raise DomainMismatchError("Kernel arguments live on different domains")
        left = PointSet.from_points([a])
        right = PointSet.from_points([b])
        return float(self.cross(left, right)[0, 0])

    def describe(self):
        return {"variant": self.variant}


class TruncatedSpectralKernel(KernelModel):
    """K_theta(x, y) = sigma^2 v(theta) sum_i (tau + lambda_i)^(-s) e_i(x) e_i(y), truncated"""

    variant = "spectral"

    def __init__(self, params, truncation=DEFAULT_TRUNCATION, domain=Domain.SPHERE):
        self.domain = Domain(domain)
        self.params = params.validate(self.domain.dimension)
        self.truncation = int(truncation)
        self.coefficients = spectral_coefficients(params, self.truncation, self.domain)
        self.v = normalization_factor(params, self.truncation, self.domain)
        self._weights = params.sigma2 * self.v * self.coefficients

    @property
    def sigma2(self):
        return self.params.sigma2

    @property
    def microergodic(self):
        """sigma^2 v(theta)"""
        return self.params.sigma2 * self.v

    def with_sigma2(self, sigma2):
        return TruncatedSpectralKernel(self.params.with_changes(sigma2=sigma2),
                                       self.truncation, self.domain)

    def smoothness(self, dimension=None):
        return self.params.s

    def _check(self, *designs):
        for ps in designs:
            if ps.domain is not self.domain:
                raise DomainMismatchError(
                    f"Kernel on {self.domain.value} evaluated on {ps.domain.value} points")

    def cross(self, left, right):
        self._check(left, right)
        if self.domain is Domain.SPHERE:
            if left is right:
                t = left.inner_products
            else:
                t = np.clip(left.coords @ right.coords.T, -1.0, 1.0)
            return legendre.legval(t, self._weights)
        phi_left = interval_basis(self.truncation, left.coords)
        phi_right = interval_basis(self.truncation, right.coords)
        return (phi_left * self._weights) @ phi_right.T

    def gram(self, ps):
        K = self.cross(ps, ps)
        return 0.5 * (K + K.T)

    def diagonal(self, ps):
        self._check(ps)
        if self.domain is Domain.SPHERE:
            return np.full(len(ps), float(np.sum(self._weights)))
        phi = interval_basis(self.truncation, ps.coords)
        return (phi ** 2) @ self._weights

    def covariance_at_chordal(self, chord):
        """Isotropic covariance as a function of the chord length (sphere only)"""
        if self.domain is not Domain.SPHERE:
            raise DomainMismatchError("Interval spectral kernels are not isotropic")
        t = 1.0 - np.asarray(chord, dtype=float) ** 2 / 2.0
        return legendre.legval(np.clip(t, -1.0, 1.0), self._weights)

    def describe(self):
        return {"variant": self.variant, "s": self.params.s, "tau": self.params.tau,
                "sigma2": self.params.sigma2, "normalization": self.params.normalization.value,
                "truncation": self.truncation, "domain": self.domain.value}


def spectral_kernel_eval(params, truncation, a, b):
    """Truncated Whittle-Matern covariance between two points"""
    return TruncatedSpectralKernel(params, truncation, a.domain).evaluate(a, b)


def spectral_truncation_tail(params, truncation, domain=Domain.SPHERE):
    """
    Diagonal mass dropped by truncating at L, times sigma^2 v(theta)

    Direct summation over the next TAIL_DIRECT_TERMS terms plus the
    closed-form integral bound of the rest.
    """
    domain = Domain(domain)
    if not params.s > domain.dimension / 2.0:
        raise DivergenceError(
            f"Tail diverges for s={params.s!r} <= d/2 = {domain.dimension / 2.0}")
    scale = params.sigma2 * normalization_factor(params, truncation, domain)
    last = truncation + TAIL_DIRECT_TERMS
    s, tau = params.s, params.tau
    if domain is Domain.SPHERE:
        l = np.arange(truncation + 1, last + 1, dtype=float)
        direct = np.sum((2.0 * l + 1.0) / (4.0 * math.pi) * (tau + l * (l + 1.0)) ** (-s))
        remainder = (tau + last * (last + 1.0)) ** (1.0 - s) / (4.0 * math.pi * (s - 1.0))
    else:
        i = np.arange(truncation + 1, last + 1, dtype=float)
        direct = np.sum((2.0 / math.pi) * (tau + i * i) ** (-s))
        remainder = (2.0 / math.pi) * float(last) ** (1.0 - 2.0 * s) / (2.0 * s - 1.0)
    return float(scale * (direct + remainder))


def matern_eval(nu, tau, sigma2, r):
    """
    Matern covariance sigma^2 2^(1-nu)/Gamma(nu) (sqrt(tau) r)^nu K_nu(sqrt(tau) r)

    Half-integer orders use their closed forms; the rest goes through the
    exponentially scaled Bessel function to stay finite at large arguments.
    """
    if not nu > 0:
        raise ParameterError(f"Matern order nu must be > 0, got {nu!r}")
    if not tau > 0 or not sigma2 > 0:
        raise ParameterError("Matern tau and sigma2 must be > 0")
    shape = np.shape(r)
    x = math.sqrt(tau) * np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    if nu == 0.5:
        value = np.exp(-x)
    elif nu == 1.5:
        value = (1.0 + x) * np.exp(-x)
    elif nu == 2.5:
        value = (1.0 + x + x * x / 3.0) * np.exp(-x)
    else:
        value = np.ones_like(x)
        positive = x > MATERN_SMALL_ARGUMENT
        xp = x[positive]
        log_value = ((1.0 - nu) * math.log(2.0) - special.gammaln(nu)
                     + nu * np.log(xp) + np.log(special.kve(nu, xp)) - xp)
        value[positive] = np.exp(log_value)
    value = (sigma2 * value).reshape(shape)
    return float(value) if value.ndim == 0 else value


def wendland_mu_threshold(kappa, dimension=3):
    """Smallest admissible mu for positive definiteness in R^k"""
    return (dimension + 1) / 2.0 + kappa


def default_wendland_mu(kappa, dimension=3):
    return float(math.ceil(wendland_mu_threshold(kappa, dimension)))


def _wendland_jacobi(kappa, mu, z, nodes):
    x, w = special.roots_jacobi(nodes, mu, kappa - 1.0)
    half = (1.0 - z[:, None]) / 2.0
    shift = half * (1.0 + x[None, :])          # w = u - z
    g = (z[:, None] + shift) * (shift + 2.0 * z[:, None]) ** (kappa - 1.0)
    return half[:, 0] ** (kappa + mu) * (g @ w)


def _wendland_adaptive(kappa, mu, z):
    if kappa < 1.0:
        # t = (u - z)^kappa removes the (u^2 - z^2)^(kappa - 1) endpoint singularity
        def integrand(t):
            u = z + t ** (1.0 / kappa)
            return u * (u + z) ** (kappa - 1.0) * (1.0 - u) ** mu / kappa
        upper = (1.0 - z) ** kappa
    else:
        def integrand(u):
            return u * (u * u - z * z) ** (kappa - 1.0) * (1.0 - u) ** mu
        upper = 1.0
    lower = 0.0 if kappa < 1.0 else z
    value, _ = integrate.quad(integrand, lower, upper, epsabs=WENDLAND_QUAD_TOLERANCE,
                              epsrel=WENDLAND_QUAD_TOLERANCE, limit=200)
    return value


def wendland_integral(kappa, mu, z, nodes=WENDLAND_JACOBI_NODES):
    """Integral int_z^1 u (u^2 - z^2)^(kappa-1) (1 - u)^mu du for z in [0, 1)"""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    result = np.zeros_like(z)
    at_origin = z == 0.0
    result[at_origin] = special.beta(2.0 * kappa, mu + 1.0)
    far = (z >= WENDLAND_JACOBI_SWITCH) & (z < 1.0)
    if np.any(far):
        result[far] = _wendland_jacobi(kappa, mu, z[far], nodes)
    near = (z > 0.0) & (z < WENDLAND_JACOBI_SWITCH)
    for index in np.flatnonzero(near):
        result[index] = _wendland_adaptive(kappa, mu, z[index])
    return result


def wendland_eval(kappa, mu, beta, sigma2, r, dimension=3, nodes=WENDLAND_JACOBI_NODES):
    """
    Generalized Wendland covariance, compactly supported on r < beta

    sigma^2 2^(1-kappa)/Gamma(kappa) int_{r/beta}^1 u (u^2 - r^2/beta^2)^(kappa-1) (1-u)^mu du
    """
    if not kappa > 0:
        raise ParameterError(f"Wendland kappa must be > 0, got {kappa!r}")
    if mu < wendland_mu_threshold(kappa, dimension):
        raise ParameterError(
            f"Wendland mu={mu!r} below threshold {wendland_mu_threshold(kappa, dimension)}")
    if not beta > 0 or not sigma2 > 0:
        raise ParameterError("Wendland beta and sigma2 must be > 0")

    z = np.asarray(r, dtype=float) / beta
    flat = np.atleast_1d(z).ravel()
    values = np.zeros_like(flat)
    inside = flat < 1.0
    if np.any(inside):
        unique, inverse = np.unique(flat[inside], return_inverse=True)
        values[inside] = wendland_integral(kappa, mu, unique, nodes)[inverse]
    scale = sigma2 * 2.0 ** (1.0 - kappa) / special.gamma(kappa)
    values = scale * values.reshape(np.shape(z))
    return float(values) if np.ndim(values) == 0 else values


class _ChordalKernel(KernelModel):
    """Ambient-space kernel restricted to a design through chordal distances"""

    def cross(self, left, right):
        if left.domain is not right.domain:
            raise DomainMismatchError("Designs live on different domains")
        if left is right:
            r = left.chordal_distances
        else:
            diff = left.ambient[:, None, :] - right.ambient[None, :, :]
            r = np.sqrt(np.sum(diff ** 2, axis=2))
        return self.covariance_at_chordal(r)

    def gram(self, ps):
        K = self.cross(ps, ps)
        return 0.5 * (K + K.T)

    def diagonal(self, ps):
        return np.full(len(ps), float(self.covariance_at_chordal(0.0)))

    @abstractmethod
    def covariance_at_chordal(self, chord):
        ...


class EuclideanMaternKernel(_ChordalKernel):
    variant = "matern"

    def __init__(self, nu, tau, sigma2=1.0):
        if not nu > 0:
            raise ParameterError(f"Matern order nu must be > 0, got {nu!r}")
        if not tau > 0 or not sigma2 > 0:
            raise ParameterError("Matern tau and sigma2 must be > 0")
        self.nu = float(nu)
        self.tau = float(tau)
        self._sigma2 = float(sigma2)

    @property
    def sigma2(self):
        return self._sigma2

    @property
    def scale(self):
        return self.tau

    def with_sigma2(self, sigma2):
        return EuclideanMaternKernel(self.nu, self.tau, sigma2)

    def with_scale(self, scale):
        return EuclideanMaternKernel(self.nu, scale, self._sigma2)

    def smoothness(self, dimension=2):
        return self.nu + dimension / 2.0

    def covariance_at_chordal(self, chord):
        return matern_eval(self.nu, self.tau, self._sigma2, chord)

    def describe(self):
        return {"variant": self.variant, "nu": self.nu, "tau": self.tau, "sigma2": self._sigma2}


class GeneralizedWendlandKernel(_ChordalKernel):
    variant = "wendland"

    def __init__(self, kappa, beta, sigma2=1.0, mu=None, ambient_dimension=3):
        self.ambient_dimension = int(ambient_dimension)
        self.kappa = float(kappa)
        self.mu = default_wendland_mu(kappa, ambient_dimension) if mu is None else float(mu)
        if not self.kappa > 0:
            raise ParameterError(f"Wendland kappa must be > 0, got {kappa!r}")
        if self.mu < wendland_mu_threshold(self.kappa, self.ambient_dimension):
            raise ParameterError(f"Wendland mu={self.mu!r} below validity threshold")
        if not beta > 0 or not sigma2 > 0:
            raise ParameterError("Wendland beta and sigma2 must be > 0")
        self.beta = float(beta)
        self._sigma2 = float(sigma2)

    @property
    def sigma2(self):
        return self._sigma2

    @property
    def scale(self):
        return self.beta

    def with_sigma2(self, sigma2):
        return GeneralizedWendlandKernel(self.kappa, self.beta, sigma2, self.mu,
                                         self.ambient_dimension)

    def with_scale(self, scale):
        return GeneralizedWendlandKernel(self.kappa, scale, self._sigma2, self.mu,
                                         self.ambient_dimension)

    def smoothness(self, dimension=2):
        return self.kappa + (dimension + 1) / 2.0

    def covariance_at_chordal(self, chord):
        return wendland_eval(self.kappa, self.mu, self.beta, self._sigma2, chord,
                             dimension=self.ambient_dimension)

    def describe(self):
        return {"variant": self.variant, "kappa": self.kappa, "mu": self.mu,
                "beta": self.beta, "sigma2": self._sigma2}


def gram_matrix(model, ps):
    """Symmetric Gram matrix K(x) with entries K(x_i, x_j)"""
    ps.require_distinct()
    return model.gram(ps)


@dataclass(frozen=True)
class FittedParameters:
    model: KernelModel
    scale: float
    sigma2: float
    residual: float
    relative_residual: float


def _scale_bounds(family):
    if isinstance(family, EuclideanMaternKernel):
        return 1e-2, 1e4
    return 5e-2, 5e1


def _fit_magnitude(target_curve, unit_curve):
    denominator = float(unit_curve @ unit_curve)
    if denominator == 0.0:
        return 0.0, float(target_curve @ target_curve)
    sigma2 = max(float(target_curve @ unit_curve) / denominator, 0.0)
    diff = target_curve - sigma2 * unit_curve
    return sigma2, float(diff @ diff)


def fit_auxiliary_parameters(target, family, distance_grid):
    """
    Least-squares match of a candidate family's covariance curve to a target

    The family's smoothness stays fixed; only its scale (tau for Matern,
    beta for Wendland) and its magnitude sigma^2 are fitted. Coarse
    geometric grid over the scale, then bounded refinement in log-scale.

    Args:
        target (KernelModel): Isotropic target kernel
        family (KernelModel): Template of the candidate family (Matern or Wendland)
        distance_grid (sequence): Chordal distances covering [0, 2]

    Returns:
        FittedParameters
    """
    grid = np.asarray(distance_grid, dtype=float)
    if grid.size == 0:
        raise InvalidArgumentError("Distance grid is empty")
    if not hasattr(family, "with_scale"):
        raise InvalidArgumentError(f"Family {family.variant!r} has no fittable scale")
    target_curve = np.asarray(target.covariance_at_chordal(grid), dtype=float)
    template = family.with_sigma2(1.0)

    def objective(log_scale):
        unit_curve = template.with_scale(math.exp(log_scale)).covariance_at_chordal(grid)
        return _fit_magnitude(target_curve, np.asarray(unit_curve, dtype=float))[1]

    low, high = _scale_bounds(family)
    log_grid = np.linspace(math.log(low), math.log(high), FIT_GRID_POINTS)
    residuals = np.array([objective(v) for v in log_grid])
    best = int(np.argmin(residuals))
    left = log_grid[max(best - 1, 0)]
    right = log_grid[min(best + 1, len(log_grid) - 1)]
    refined = optimize.minimize_scalar(objective, bounds=(left, right), method="bounded",
                                       options={"xatol": 1e-10})
    log_scale = refined.x if refined.fun <= residuals[best] else log_grid[best]

    scale = math.exp(log_scale)
    unit_curve = np.asarray(template.with_scale(scale).covariance_at_chordal(grid), dtype=float)
    sigma2, residual = _fit_magnitude(target_curve, unit_curve)
    if sigma2 <= 0.0:
        raise ParameterError("Fitted magnitude vanished; family cannot match the target")
    norm = float(target_curve @ target_curve)
    relative = math.sqrt(residual / norm) if norm > 0 else 0.0
    fitted = template.with_scale(scale).with_sigma2(sigma2)
    LOGGER.debug("Fitted %s: scale=%.6g sigma2=%.6g relative residual=%.3g",
                 family.variant, scale, sigma2, relative)
    return FittedParameters(model=fitted, scale=scale, sigma2=sigma2,
                            residual=residual, relative_residual=relative)


def default_distance_grid(points=201):
    """Chordal distances covering [0, 2] on the unit sphere"""
    return np.linspace(0.0, CHORDAL_DIAMETER, points)
