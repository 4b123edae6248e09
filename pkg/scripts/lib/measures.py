#!/usr/bin/env python3
"""
Equivalence of Gaussian and Non-Gaussian Field Measures
Hellinger affinities of scaled coefficient laws, eigenvalue-ratio
sequences and Kakutani partial sums with an equivalence/orthogonality
verdict
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, stats

from errors import (DomainMismatchError, InvalidArgumentError, ParameterError,
                    UnsupportedLawError)
from kernels import DEFAULT_TRUNCATION, NormalizationKind, SpectralParams, normalization_factor
from sampler import CoefficientLaw, LawKind
from spectral import eigensystem_for
from study_analysis import fit_loglog_slope

LOGGER = logging.getLogger(__name__)

DEFAULT_TERMS = 100_000
MIN_TERMS = 100
QUADRATURE_TOLERANCE = 1e-10
FISHER_WINDOW = 1e-3            # |log a| below this uses the Fisher expansion
TAIL_FRACTION = 0.1             # slope fitted over i in [N * TAIL_FRACTION, N]
ORTHOGONAL_SLOPE = -1.0
EQUIVALENT_SLOPE = -1.1
TAIL_TOLERANCE = 1.0
MATCH_TOLERANCE = 1e-10
TAYLOR_WINDOW = (0.5, 2.0)


class Verdict(str, Enum):
    EQUIVALENT = "equivalent"
    ORTHOGONAL = "orthogonal"
    UNDECIDED = "undecided"


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    small = x < 1.0
    out = np.empty_like(x)
    out[small] = np.log1p(2.0 * np.sinh(x[small] / 2.0) ** 2)
    big = x[~small]
    out[~small] = big + np.log1p(np.exp(-2.0 * big)) - math.log(2.0)
    return out


def _student_density(df):
    scale = math.sqrt((df - 2.0) / df)
    return lambda x: stats.t.pdf(x / scale, df) / scale


def _tangent_affinity(density, a):
    """Affinity of a symmetric density under scaling by a, on (-inf, inf) through x = tan(t)"""
    root = math.sqrt(a)

    def integrand(t):
        x = math.tan(t)
        value = density(x / root) / root * density(x * root) * root
        return math.sqrt(value) / math.cos(t) ** 2

    half, _ = integrate.quad(integrand, 0.0, math.pi / 2.0, epsabs=QUADRATURE_TOLERANCE,
                             epsrel=QUADRATURE_TOLERANCE, limit=200)
    return 2.0 * half


@dataclass(frozen=True)
class AffinityFunction:
    """
    phi(a) = rho(P_a, P_1): Hellinger affinity of a coefficient law and its scaled copy

    Gaussian and exponential laws have closed forms; the Student-t law goes
    through quadrature. The exponential affinity is that of the uncentered
    Exp(1) scale family, which is 2 sqrt(a) / (1 + a). Rademacher laws are
    singular: phi(a) = 0 for every a != 1.
    """

    law: CoefficientLaw

    @property
    def singular(self):
        return self.law.kind is LawKind.RADEMACHER

    @property
    def fisher_information(self):
        """Fisher information of the scale family at a = 1"""
        kind = self.law.kind
        if kind is LawKind.GAUSSIAN:
            return 2.0
        if kind is LawKind.CENTERED_EXPONENTIAL:
            return 1.0
        if kind is LawKind.SCALED_STUDENT_T:
            return 2.0 * self.law.df / (self.law.df + 3.0)
        raise UnsupportedLawError(f"{self.law.label} has no density")

    def __call__(self, a):
        return hellinger_affinity(self.law, a)

    def neg_log(self, log_scale):
        """-log phi(a) as a function of log a, vectorized"""
        ell = np.asarray(log_scale, dtype=float)
        kind = self.law.kind
        if kind is LawKind.GAUSSIAN:
            return 0.5 * _log_cosh(ell)
        if kind is LawKind.CENTERED_EXPONENTIAL:
            return _log_cosh(ell / 2.0)
        if kind is LawKind.RADEMACHER:
            return np.where(ell == 0.0, 0.0, np.inf)

        unique, inverse = np.unique(ell, return_inverse=True)
        values = np.empty(unique.shape)
        density = _student_density(self.law.df)
        for j, value in enumerate(unique):
            if abs(value) < FISHER_WINDOW:
                values[j] = self.fisher_information * value ** 2 / 8.0
            else:
                values[j] = -math.log(_tangent_affinity(density, math.exp(value)))
        return values[inverse].reshape(ell.shape)


def hellinger_affinity(law, a):
    """
    phi(a) for a scaled coefficient law

    Args:
        law (CoefficientLaw): Coefficient law
        a (float): Positive scale

    Returns:
        float in [0, 1]
    """
    if not a > 0:
        raise InvalidArgumentError(f"Scale must be > 0, got {a!r}")
    kind = law.kind
    if kind is LawKind.GAUSSIAN:
        return math.sqrt(2.0 * a / (1.0 + a * a))
    if kind is LawKind.CENTERED_EXPONENTIAL:
        return 2.0 * math.sqrt(a) / (1.0 + a)
    if kind is LawKind.RADEMACHER:
        return 1.0 if a == 1.0 else 0.0
    if a == 1.0:
        return 1.0
    return min(_tangent_affinity(_student_density(law.df), a), 1.0)


def hellinger_affinity_quadrature(law, a):
    """Direct numerical integral of sqrt(f(x / a) f(x) / a); checks the closed forms"""
    if not a > 0:
        raise InvalidArgumentError(f"Scale must be > 0, got {a!r}")
    kind = law.kind
    if kind is LawKind.RADEMACHER:
        raise UnsupportedLawError("Rademacher law has no density")
    if kind is LawKind.SCALED_STUDENT_T:
        return _tangent_affinity(_student_density(law.df), a)
    if kind is LawKind.GAUSSIAN:
        density, low = stats.norm.pdf, -np.inf
    else:
        density, low = stats.expon.pdf, 0.0

    def integrand(x):
        return math.sqrt(density(x / a) / a * density(x))

    value, _ = integrate.quad(integrand, low, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


def microergodic_value(params, dimension):
    """sigma^2 v(theta) under power normalization"""
    return params.sigma2 * params.power_factor(dimension)


def matched_microergodic(params, tau, dimension):
    """Parameters at range tau whose magnitude keeps sigma^2 v(theta) fixed"""
    target = microergodic_value(params, dimension)
    moved = params.with_changes(tau=float(tau), normalization=NormalizationKind.POWER)
    return moved.with_changes(sigma2=target / moved.power_factor(dimension))


def _log_v(params, es):
    kind = params.normalization
    if kind is NormalizationKind.POWER:
        return math.log(params.power_factor(es.dimension))
    if kind is NormalizationKind.NONE:
        return 0.0
    if es.domain is None:
        raise DomainMismatchError("Unit-diagonal normalization needs a concrete domain")
    return math.log(normalization_factor(params, DEFAULT_TRUNCATION, es.domain))


def log_ratio_sequence(p1, p2, es, count):
    """log a_i, with the equal-smoothness case through log1p"""
    for params in (p1, p2):
        if not params.s > 0:
            raise ParameterError(f"Smoothness must be > 0, got {params.s!r}")
    lam = es.head(count)
    offset = 0.5 * (math.log(p1.sigma2) + _log_v(p1, es) - math.log(p2.sigma2) - _log_v(p2, es))
    if p1.s == p2.s:
        return offset - 0.5 * p1.s * np.log1p((p1.tau - p2.tau) / (p2.tau + lam))
    return offset - 0.5 * p1.s * np.log(p1.tau + lam) + 0.5 * p2.s * np.log(p2.tau + lam)


def eigenvalue_ratio_sequence(p1, p2, es, count):
    """
    a_i = sigma_1 sqrt(v_1) (tau_1 + lambda_i)^(-s_1/2) / (sigma_2 sqrt(v_2) (tau_2 + lambda_i)^(-s_2/2))

    Args:
        p1, p2 (SpectralParams): The two parameter sets
        es (EigenSystem): Eigenvalues, at least `count` of them
        count (int): Number of terms

    Returns:
        np.ndarray of shape (count,)
    """
    return np.exp(log_ratio_sequence(p1, p2, es, count))


def analytic_verdict(p1, p2, law, dimension):
    """Closed-form rule: equal smoothness, equal microergodic value and d <= 3"""
    identical = (p1.s == p2.s and math.isclose(p1.tau, p2.tau, rel_tol=MATCH_TOLERANCE)
                 and math.isclose(p1.sigma2, p2.sigma2, rel_tol=MATCH_TOLERANCE)
                 and p1.normalization is p2.normalization)
    if identical:
        return Verdict.EQUIVALENT, "identical parameters"
    if law.kind is LawKind.RADEMACHER:
        return Verdict.ORTHOGONAL, "scaled Rademacher laws are mutually singular"
    if p1.s != p2.s:
        return Verdict.ORTHOGONAL, "smoothness differs"
    matched = math.isclose(microergodic_value(p1, dimension), microergodic_value(p2, dimension),
                           rel_tol=MATCH_TOLERANCE)
    if not matched:
        return Verdict.ORTHOGONAL, "microergodic values differ"
    if dimension <= 3:
        return Verdict.EQUIVALENT, "equal smoothness and microergodic value, d <= 3"
    return Verdict.ORTHOGONAL, "equal smoothness and microergodic value, d > 3"


@dataclass
class KakutaniReport:
    p1: SpectralParams
    p2: SpectralParams
    dimension: int
    law: str
    terms: np.ndarray = field(repr=False)
    partial_sums: np.ndarray = field(repr=False)
    verdict: Verdict
    rule: str
    analytic: Verdict
    analytic_rule: str
    tail_slope: float = None
    extrapolated_tail: float = None
    singular: bool = False
    notes: list = field(default_factory=list)
    regime: str = None

    @property
    def agrees(self):
        return self.verdict is self.analytic

    def as_dict(self):
        return {"s1": self.p1.s, "tau1": self.p1.tau, "sigma2_1": self.p1.sigma2,
                "s2": self.p2.s, "tau2": self.p2.tau, "sigma2_2": self.p2.sigma2,
                "dimension": self.dimension, "law": self.law, "terms": len(self.terms),
                "partial_sum": float(self.partial_sums[-1]), "tail_slope": self.tail_slope,
                "extrapolated_tail": self.extrapolated_tail, "verdict": self.verdict.value,
                "rule": self.rule, "analytic": self.analytic.value,
                "analytic_rule": self.analytic_rule, "singular": self.singular,
                "notes": list(self.notes), "regime": self.regime}


def _empirical_verdict(terms, tolerance):
    """(verdict, rule, slope, extrapolated tail) from the tail of the term sequence"""
    count = len(terms)
    if np.any(np.isinf(terms)):
        return Verdict.ORTHOGONAL, "infinite terms", None, math.inf
    start = int(count * TAIL_FRACTION)
    index = np.arange(start + 1, count + 1, dtype=float)
    tail = terms[start:]
    positive = tail > 0
    if np.count_nonzero(positive) < 10:
        return Verdict.EQUIVALENT, "vanishing terms", None, 0.0
    slope = fit_loglog_slope(index[positive], tail[positive])
    if slope >= ORTHOGONAL_SLOPE:
        return Verdict.ORTHOGONAL, f"tail slope {slope:.3f} >= {ORTHOGONAL_SLOPE:g}", slope, math.inf
    extrapolated = float(terms[-1]) * count / (-slope - 1.0)
    if slope >= EQUIVALENT_SLOPE:
        return (Verdict.UNDECIDED, f"tail slope {slope:.3f} within 10% of {ORTHOGONAL_SLOPE:g}",
                slope, extrapolated)
    if extrapolated < tolerance:
        return (Verdict.EQUIVALENT, f"tail slope {slope:.3f}, extrapolated tail {extrapolated:.3g}",
                slope, extrapolated)
    return (Verdict.UNDECIDED, f"extrapolated tail {extrapolated:.3g} >= {tolerance:g}",
            slope, extrapolated)


def kakutani_classify(p1, p2, law, es=None, count=DEFAULT_TERMS, dimension=None,
                      tolerance=TAIL_TOLERANCE):
    """
    Kakutani sum of -log phi(a_i) and the equivalence/orthogonality verdict

    Args:
        p1, p2 (SpectralParams): Parameter sets of the two field measures
        law (CoefficientLaw): Law of the KL coefficients
        es (EigenSystem): Eigenvalues; built from the dimension when omitted
        count (int): Number of terms N >= 100
        dimension (int): d, defaults to the eigen system's dimension
        tolerance (float): Extrapolated-tail threshold for EQUIVALENT

    Returns:
        KakutaniReport
    """
    if count < MIN_TERMS:
        raise InvalidArgumentError(f"Kakutani sums need at least {MIN_TERMS} terms")
    if es is None:
        if dimension is None:
            raise InvalidArgumentError("Need an eigen system or a dimension")
        es = eigensystem_for(int(dimension), count)
    if dimension is not None and int(dimension) != es.dimension:
        raise DomainMismatchError(f"Eigen system has d={es.dimension}, got d={dimension}")
    dimension = es.dimension

    affinity = AffinityFunction(law)
    terms = affinity.neg_log(log_ratio_sequence(p1, p2, es, count))
    terms = np.maximum(terms, 0.0)
    partial_sums = np.cumsum(terms)
    verdict, rule, slope, extrapolated = _empirical_verdict(terms, tolerance)
    analytic, analytic_rule = analytic_verdict(p1, p2, law, dimension)

    notes = []
    if affinity.singular:
        notes.append("singular law: phi(a) = 0 for a != 1")
    if (law.kind is LawKind.CENTERED_EXPONENTIAL and dimension <= 3 and p1.s == p2.s
            and 1.0 <= p1.tau <= p2.tau and analytic is Verdict.EQUIVALENT):
        notes.append("one-sided absolute continuity: supports of the scaled laws are nested")
    report = KakutaniReport(p1=p1, p2=p2, dimension=dimension, law=law.label, terms=terms,
                            partial_sums=partial_sums, verdict=verdict, rule=rule,
                            analytic=analytic, analytic_rule=analytic_rule, tail_slope=slope,
                            extrapolated_tail=extrapolated, singular=affinity.singular,
                            notes=notes)
    if not report.agrees:
        LOGGER.warning("Empirical verdict %s differs from analytic %s (%s)",
                       verdict.value, analytic.value, rule)
    return report


def term_slope(report, start, stop):
    """Fitted log-log slope of the Kakutani terms over 1-based indices start..stop"""
    index = np.arange(start, stop + 1, dtype=float)
    values = report.terms[start - 1:stop]
    keep = values > 0
    return fit_loglog_slope(index[keep], values[keep])


def taylor_window_check(law, grid):
    """
    Bracketing constants of -log phi(a) / (a - 1)^2 over a grid near 1

    Returns:
        tuple: (c_hat, C_hat)
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid == 1.0):
        raise InvalidArgumentError("Grid must be nonempty and exclude a = 1")
    if np.any(grid < TAYLOR_WINDOW[0]) or np.any(grid > TAYLOR_WINDOW[1]):
        raise InvalidArgumentError(f"Grid must lie in {list(TAYLOR_WINDOW)}")
    affinity = AffinityFunction(law)
    if affinity.singular:
        raise UnsupportedLawError(f"{law.label} has no density")
    ratio = affinity.neg_log(np.log(grid)) / (grid - 1.0) ** 2
    return float(np.min(ratio)), float(np.max(ratio))


KAKUTANI_REGIMES = ("matched", "sigma_mismatch", "s_mismatch")


def kakutani_matrix(s, tau1, tau2, law, dimensions=(1, 2, 3, 4), count=DEFAULT_TERMS,
                    sigma_factor=2.0, s_shift=1.0):
    """
    Reports over dimensions x {matched, sigma-mismatch, s-mismatch}

    The matched pair keeps sigma^2 v(theta) equal across tau1 and tau2; the
    sigma mismatch scales the second magnitude by sigma_factor; the s
    mismatch shifts the second smoothness by s_shift.
    """
    reports = []
    for d in dimensions:
        base = SpectralParams(s, tau1)
        matched = matched_microergodic(base, tau2, d)
        seconds = {"matched": matched,
                   "sigma_mismatch": matched.with_changes(sigma2=matched.sigma2 * sigma_factor),
                   "s_mismatch": matched.with_changes(s=s + s_shift)}
        es = eigensystem_for(int(d), count)
        for regime in KAKUTANI_REGIMES:
            report = kakutani_classify(base, seconds[regime], law, es, count)
            report.regime = regime
            reports.append(report)
    return reports
