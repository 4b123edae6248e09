#!/usr/bin/env python3
"""
Likelihood Estimators
Smoothness by coarse grid + golden-section maximization of the Gaussian
log-likelihood, closed-form magnitude, profiled range/magnitude and the
microergodic parameter
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from errors import (EstimationFailedError, InvalidArgumentError, NearSingularError,
                    ParameterError)
from geometry import Domain
from kernels import (DEFAULT_TRUNCATION, EuclideanMaternKernel, GeneralizedWendlandKernel,
                     NormalizationKind, SpectralParams, TruncatedSpectralKernel, gram_matrix)
from likelihood import LOG_2PI, evaluate_gram_likelihood

LOGGER = logging.getLogger(__name__)

# Golden ratio
INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi

SEARCH_INTERVAL = (1.0 + 1e-7, 30.0)
GRID_STEP = 0.25
GOLDEN_TOLERANCE = 1e-4
RANGE_BOUNDS = (1.0, 30.0)
RANGE_GRID_POINTS = 30

STATUS_OK = "ok"
STATUS_INVALID = "invalid_parameter"
STATUS_SINGULAR = "singular"
STATUS_DEGENERATE = "degenerate"


@dataclass(frozen=True)
class KernelFamily:
    """One-parameter family value -> KernelModel (value is s or tau)"""

    build: Callable
    profile_magnitude: bool
    dimension: int
    label: str = "family"
    parameter: str = "s"
    nugget: float = 0.0


def spectral_family(tau, truncation=DEFAULT_TRUNCATION, domain=Domain.SPHERE,
                    normalization=NormalizationKind.UNIT_DIAGONAL, sigma2=1.0,
                    profile_magnitude=False):
    """Truncated spectral kernels over the smoothness s"""
    domain = Domain(domain)

    def build(s):
        params = SpectralParams(s, tau, sigma2, normalization)
        return TruncatedSpectralKernel(params, truncation, domain)

    return KernelFamily(build, profile_magnitude, domain.dimension, label=f"spectral(tau={tau:g})")


def matern_family(tau, sigma2=1.0, dimension=2, profile_magnitude=True):
    """Restricted Euclidean Matern kernels with nu = s - d/2"""

    def build(s):
        return EuclideanMaternKernel(s - dimension / 2.0, tau, sigma2)

    return KernelFamily(build, profile_magnitude, dimension, label=f"matern(tau={tau:.6g})")


def wendland_family(beta, sigma2=1.0, dimension=2, profile_magnitude=True):
    """Restricted generalized Wendland kernels with kappa = s - (d+1)/2"""

    def build(s):
        return GeneralizedWendlandKernel(s - (dimension + 1) / 2.0, beta, sigma2,
                                         ambient_dimension=dimension + 1)

    return KernelFamily(build, profile_magnitude, dimension, label=f"wendland(beta={beta:.6g})")


def range_family(s, truncation=DEFAULT_TRUNCATION, domain=Domain.SPHERE,
                 normalization=NormalizationKind.POWER):
    """Truncated spectral kernels over tau at fixed s, unit magnitude (profiled)"""
    domain = Domain(domain)

    def build(tau):
        return TruncatedSpectralKernel(SpectralParams(s, tau, 1.0, normalization), truncation, domain)

    return KernelFamily(build, True, domain.dimension, label=f"spectral(s={s:g})", parameter="tau")


@dataclass(frozen=True)
class ObjectivePoint:
    value: float
    loglik: float
    status: str
    sigma2_hat: float = None
    cond_min: float = None
    cond_max: float = None


@dataclass
class OptimizerTrace:
    grid: list = field(default_factory=list)
    brackets: list = field(default_factory=list)
    tolerance: float = GOLDEN_TOLERANCE

    @property
    def failures(self):
        return sum(1 for point in self.grid if point.status != STATUS_OK)


@dataclass
class EstimationResult:
    s_hat: float
    sigma2_hat: float
    loglik: float
    boundary: bool
    trace: OptimizerTrace
    elapsed: float
    tau_hat: float = None
    microergodic: float = None
    cond_min: float = None
    cond_max: float = None

    def as_dict(self):
        return {"s_hat": self.s_hat, "sigma2_hat": self.sigma2_hat, "tau_hat": self.tau_hat,
                "microergodic": self.microergodic, "loglik": self.loglik,
                "boundary": self.boundary, "cond_min": self.cond_min, "cond_max": self.cond_max,
                "grid_evaluations": len(self.trace.grid), "grid_failures": self.trace.failures,
                "brackets": [list(b) for b in self.trace.brackets],
                "tolerance": self.trace.tolerance, "elapsed_seconds": self.elapsed}


def profiled_objective(family, ps, u, value):
    """
    Log-likelihood at one family parameter; sigma^2 profiled when the family asks

    With sigma^2_hat = u^T K^-1 u / n plugged in, the profiled value is
    -(n/2) log(2 pi) - logdet/2 - (n/2) log(sigma^2_hat) - n/2.
    """
    try:
        model = family.build(value)
    except ParameterError:
        return ObjectivePoint(value, None, STATUS_INVALID)
    if family.profile_magnitude:
        model = model.with_sigma2(1.0)
    try:
        ev = evaluate_gram_likelihood(gram_matrix(model, ps), u, family.nugget)
    except NearSingularError:
        LOGGER.debug("Singular Gram matrix at %s=%.6g", family.parameter, value)
        return ObjectivePoint(value, None, STATUS_SINGULAR)

    if not family.profile_magnitude:
        return ObjectivePoint(value, ev.loglik, STATUS_OK, model.sigma2, ev.cond_min, ev.cond_max)
    n = ev.n
    sigma2_hat = ev.quadform / n
    if not sigma2_hat > 0:
        return ObjectivePoint(value, None, STATUS_DEGENERATE, 0.0, ev.cond_min, ev.cond_max)
    loglik = -0.5 * n * LOG_2PI - 0.5 * ev.logdet - 0.5 * n * math.log(sigma2_hat) - 0.5 * n
    return ObjectivePoint(value, loglik, STATUS_OK, sigma2_hat, ev.cond_min, ev.cond_max)


def _score(point):
    return point.loglik if point.status == STATUS_OK else -math.inf


def _evaluate_grid(objective, grid, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(objective, grid))
    return [objective(v) for v in grid]


def golden_section_maximize(objective, low, high, tolerance, trace):
    """
    Golden-section search for a maximum on [low, high]

    Reuses one evaluation per step; every bracket is appended to the trace.
    Returns the evaluated point at the midpoint of the final bracket.
    """
    a, b = low, high
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = _score(objective(c))
    fd = _score(objective(d))
    trace.brackets.append((a, b))
    while (b - a) > tolerance:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = _score(objective(c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = _score(objective(d))
        trace.brackets.append((a, b))
    return objective((a + b) / 2.0)


def _maximize(family, ps, u, low, high, grid, tolerance, workers):
    def objective(value):
        return profiled_objective(family, ps, u, value)

    trace = OptimizerTrace(tolerance=tolerance)
    trace.grid = _evaluate_grid(objective, grid, workers)
    scores = np.array([_score(p) for p in trace.grid])
    if not np.any(np.isfinite(scores)):
        statuses = sorted({p.status for p in trace.grid})
        raise EstimationFailedError(
            f"No admissible likelihood value on the {family.parameter} grid (statuses: {statuses})")

    best_index = int(np.argmax(scores))  # first maximum: ties go to the smaller value
    best = trace.grid[best_index]
    left = grid[max(best_index - 1, 0)]
    right = grid[min(best_index + 1, len(grid) - 1)]
    if right > left:
        refined = golden_section_maximize(objective, left, right, tolerance, trace)
        if _score(refined) > _score(best):
            best = refined
    boundary = (abs(best.value - low) <= tolerance or abs(best.value - high) <= tolerance)
    return best, boundary, trace


def search_grid(low, high, step):
    """Coarse grid low, low + step, ... with the upper end always included"""
    if not high >= low:
        raise InvalidArgumentError(f"Empty search interval [{low}, {high}]")
    grid = list(np.arange(low, high, step)) if high > low else []
    if not grid or grid[-1] < high:
        grid.append(high)
    return [float(v) for v in grid]


def estimate_smoothness(family, ps, u, interval=SEARCH_INTERVAL, grid_step=GRID_STEP,
                        tolerance=GOLDEN_TOLERANCE, workers=1):
    """
    Smoothness maximizing the (optionally profiled) Gaussian log-likelihood

    Args:
        family (KernelFamily): Kernel family over s
        ps (PointSet): Design
        u (np.ndarray): Observations u(x)
        interval (tuple): Search interval [s_min, S_max], s_min > d/2
        grid_step (float): Coarse grid step
        tolerance (float): Final golden-section bracket width
        workers (int): Threads for the coarse grid

    Returns:
        EstimationResult
    """
    start = time.perf_counter()
    low, high = float(interval[0]), float(interval[1])
    if not low > family.dimension / 2.0:
        raise ParameterError(f"s_min={low!r} must exceed d/2 = {family.dimension / 2.0}")
    grid = search_grid(low, high, grid_step)
    best, boundary, trace = _maximize(family, ps, u, low, high, grid, tolerance, workers)
    if boundary:
        LOGGER.warning("Smoothness maximizer on the search boundary: s=%.6g", best.value)

    model = family.build(best.value)
    if family.profile_magnitude:
        model = model.with_sigma2(best.sigma2_hat)
    return EstimationResult(s_hat=best.value, sigma2_hat=best.sigma2_hat, loglik=best.loglik,
                            boundary=boundary, trace=trace,
                            elapsed=time.perf_counter() - start,
                            microergodic=getattr(model, "microergodic", None),
                            cond_min=best.cond_min, cond_max=best.cond_max)


def estimate_magnitude(model, ps, u):
    """sigma^2_hat = u(x)^T K_s(x)^-1 u(x) / n with K_s at unit magnitude"""
    ev = evaluate_gram_likelihood(gram_matrix(model.with_sigma2(1.0), ps), u)
    return ev.quadform / ev.n


def estimate_range_and_magnitude(family, ps, u, tau_bounds=RANGE_BOUNDS,
                                 grid_points=RANGE_GRID_POINTS, tolerance=GOLDEN_TOLERANCE,
                                 workers=1):
    """
    Profiled maximum likelihood over tau at fixed s, with sigma^2 in closed form

    Returns:
        EstimationResult with tau_hat and the microergodic sigma^2_hat v(theta_hat)
    """
    start = time.perf_counter()
    low, high = float(tau_bounds[0]), float(tau_bounds[1])
    if not 1.0 <= low <= high:
        raise InvalidArgumentError(f"Need 1 <= tau_L <= tau_U, got [{low}, {high}]")
    if not family.profile_magnitude:
        raise InvalidArgumentError("Range estimation needs a family with a free magnitude")
    grid = [low] if low == high else [float(v) for v in np.geomspace(low, high, grid_points)]
    best, boundary, trace = _maximize(family, ps, u, low, high, grid, tolerance, workers)
    if boundary and low < high:
        LOGGER.warning("Range maximizer on the bound: tau=%.6g", best.value)

    model = family.build(best.value).with_sigma2(best.sigma2_hat)
    return EstimationResult(s_hat=model.smoothness(family.dimension), sigma2_hat=best.sigma2_hat,
                            loglik=best.loglik, boundary=boundary, trace=trace,
                            elapsed=time.perf_counter() - start, tau_hat=best.value,
                            microergodic=getattr(model, "microergodic", None),
                            cond_min=best.cond_min, cond_max=best.cond_max)


def likelihood_profile(family, ps, u, grid):
    """
    Objective surface as a table: one row per grid value, in grid order

    Invalid parameters and singular Gram matrices are marked in `status`.
    """
    rows = []
    for value in grid:
        point = profiled_objective(family, ps, u, float(value))
        rows.append({family.parameter: point.value, "loglik": point.loglik,
                     "sigma2_hat": point.sigma2_hat, "status": point.status})
    return pd.DataFrame(rows, columns=[family.parameter, "loglik", "sigma2_hat", "status"])
