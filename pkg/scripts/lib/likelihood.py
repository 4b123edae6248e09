#!/usr/bin/env python3
"""
Gaussian Likelihood Machinery
Cholesky factorization, log-determinant, quadratic form, minimum-norm
interpolant and conditional (kriging) variances
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from errors import DegenerateDesignError, InvalidArgumentError, NearSingularError
from geometry import DEFAULT_RESOLUTION_FACTOR, PointSet, candidate_design, quasi_uniform_design
from kernels import gram_matrix

LOGGER = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
CONDITIONING_CAP = 200


def cholesky_factor(K, nugget=0.0):
    """
    Lower Cholesky factor of a Gram matrix, with no silent jitter

    A diagonal nugget is added only when requested explicitly. Breakdown,
    non-finite entries and pivots below n * eps of the largest diagonal
    entry raise NearSingularError carrying the failing pivot index.
    """
    K = np.asarray(K, dtype=float)
    if nugget:
        K = K + nugget * np.eye(K.shape[0])
    if not np.all(np.isfinite(K)):
        raise NearSingularError("Gram matrix has non-finite entries")
    lower, info = lapack.dpotrf(K, lower=1, clean=1)
    if info > 0:
        raise NearSingularError(f"Cholesky breakdown at pivot {info - 1}", pivot=info - 1)
    if info < 0:
        raise InvalidArgumentError(f"Invalid Gram matrix argument {-info}")

    pivots = np.diag(lower)
    floor = K.shape[0] * np.finfo(float).eps * float(np.max(np.diag(K)))
    weak = np.flatnonzero(pivots ** 2 <= floor)
    if weak.size:
        raise NearSingularError(f"Numerically singular pivot {weak[0]}", pivot=int(weak[0]))
    return lower


@dataclass(frozen=True)
class LikelihoodEval:
    """l = -(n/2) log(2 pi) - logdet/2 - quadform/2"""

    loglik: float
    logdet: float
    quadform: float
    n: int
    cond_min: float
    cond_max: float
    nugget: float = 0.0


def _whitened(lower, u):
    return solve_triangular(lower, np.asarray(u, dtype=float), lower=True)


def evaluate_gram_likelihood(K, u, nugget=0.0):
    """Log-likelihood of data u under N(0, K); the shared computation path"""
    lower = cholesky_factor(K, nugget)
    pivots = np.diag(lower)
    w = _whitened(lower, u)
    quadform = float(w @ w)
    logdet = 2.0 * float(np.sum(np.log(pivots)))
    n = len(u)
    loglik = -0.5 * n * LOG_2PI - 0.5 * logdet - 0.5 * quadform
    return LikelihoodEval(loglik=loglik, logdet=logdet, quadform=quadform, n=n,
                          cond_min=float(np.min(pivots)), cond_max=float(np.max(pivots)),
                          nugget=float(nugget))


def log_likelihood(model, ps, u, nugget=0.0):
    """Gaussian log-likelihood of the observations u(x) under a kernel model"""
    return evaluate_gram_likelihood(gram_matrix(model, ps), u, nugget)


@dataclass
class InterpolantRep:
    """Minimum-norm interpolant m(y) = K(y, x) c with c = K(x)^-1 u(x)"""

    coefficients: np.ndarray
    model: object
    points: PointSet
    squared_norm: float

    def predict(self, targets):
        return self.model.cross(targets, self.points) @ self.coefficients


def min_norm_interpolant(model, ps, u, nugget=0.0):
    lower = cholesky_factor(gram_matrix(model, ps), nugget)
    w = _whitened(lower, u)
    coefficients = solve_triangular(lower.T, w, lower=False)
    return InterpolantRep(coefficients=coefficients, model=model, points=ps,
                          squared_norm=float(w @ w))


def conditional_variances(model, ps, targets):
    """V(y | x) = K(y, y) - K(y, x) K(x)^-1 K(x, y) for every target point"""
    prior = model.diagonal(targets)
    if ps is None or len(ps) == 0:
        return prior
    lower = cholesky_factor(gram_matrix(model, ps))
    W = solve_triangular(lower, model.cross(ps, targets), lower=True)
    return np.clip(prior - np.sum(W * W, axis=0), 0.0, prior)


def conditional_variance(model, ps, y):
    """Kriging variance at a single point y"""
    return float(conditional_variances(model, ps, PointSet.from_points([y]))[0])


def logdet_by_conditioning(model, ps):
    """
    log det K(x) as sum_i log V(x_i | x_1..x_{i-1})

    Independent dense-solve path used to validate the Cholesky log-determinant;
    quartic cost, capped at CONDITIONING_CAP points.
    """
    n = len(ps)
    if n > CONDITIONING_CAP:
        raise InvalidArgumentError(f"Conditioning path is capped at n = {CONDITIONING_CAP}")
    K = gram_matrix(model, ps)
    total = 0.0
    for i in range(n):
        if i == 0:
            variance = K[0, 0]
        else:
            k = K[:i, i]
            variance = K[i, i] - k @ np.linalg.solve(K[:i, :i], k)
        if not variance > 0:
            raise NearSingularError(f"Non-positive conditional variance at {i}", pivot=i)
        total += math.log(variance)
    return total


def sup_conditional_variance(model, ps, candidate_resolution=None):
    """Largest kriging variance over a dense candidate set (at least 10 n points)"""
    if len(ps) == 0:
        raise DegenerateDesignError("Need a nonempty design")
    resolution = candidate_resolution or DEFAULT_RESOLUTION_FACTOR * len(ps)
    candidates = candidate_design(ps.domain, resolution)
    return float(np.max(conditional_variances(model, ps, candidates)))


def conditional_variance_rate(model, sizes, domain):
    """
    Fitted log-log slope of sup_y V(y | x) against n on quasi-uniform designs

    Returns:
        tuple: (fitted slope, predicted slope -(2s - d)/d, sup variances)
    """
    d = quasi_uniform_design(domain, 2).dimension
    sups = []
    counts = []
    for n in sizes:
        design = quasi_uniform_design(domain, n)
        counts.append(len(design))
        sups.append(sup_conditional_variance(model, design))
        LOGGER.debug("n=%d sup V=%.6g", len(design), sups[-1])
    slope = float(np.polyfit(np.log(counts), np.log(sups), 1)[0])
    s = model.smoothness(d)
    return slope, -(2.0 * s - d) / d, sups
