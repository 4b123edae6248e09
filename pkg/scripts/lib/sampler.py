#!/usr/bin/env python3
"""
Field Sampler
Karhunen-Loeve simulation of Whittle-Matern fields with standardized
i.i.d. coefficients, and exact Gaussian sampling through the Cholesky
factor of the Gram matrix
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from errors import ParameterError
from geometry import Domain
from kernels import DEFAULT_TRUNCATION, gram_matrix, normalization_factor
from likelihood import cholesky_factor
from spectral import (interval_basis, interval_eigensystem, sphere_eigensystem,
                      spherical_harmonic_basis)

LOGGER = logging.getLogger(__name__)

COEFFICIENT_BLOCK = 256
DEFAULT_STUDENT_DF = 4.0


class LawKind(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    CENTERED_EXPONENTIAL = "centered_exponential"
    SCALED_STUDENT_T = "scaled_student_t"


@dataclass(frozen=True)
class CoefficientLaw:
    """Law of the KL coefficients xi_i, always mean 0 and variance 1"""

    kind: LawKind = LawKind.GAUSSIAN
    df: float = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.kind is LawKind.SCALED_STUDENT_T:
            df = DEFAULT_STUDENT_DF if self.df is None else float(self.df)
            if not df > 2:
                raise ParameterError(f"Student-t needs df > 2 for a finite variance, got {df!r}")
            object.__setattr__(self, "df", df)

    @classmethod
    def parse(cls, name, df=None):
        """Law from its config name; 'bernoulli' means the symmetric +-1 law"""
        aliases = {"bernoulli": LawKind.RADEMACHER, "exponential": LawKind.CENTERED_EXPONENTIAL,
                   "t": LawKind.SCALED_STUDENT_T, "student_t": LawKind.SCALED_STUDENT_T}
        kind = aliases.get(str(name).lower(), name)
        return cls(LawKind(kind), df)

    @property
    def label(self):
        if self.kind is LawKind.SCALED_STUDENT_T:
            return f"{self.kind.value}(df={self.df:g})"
        return self.kind.value


def _generator(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def standardized_draw(law, state, size=None):
    """
    Draws of a standardized coefficient law

    Args:
        law (CoefficientLaw): Law to draw from
        state (int | np.random.Generator): Seed or generator
        size (int): Number of draws; None returns a single float

    Returns:
        float or np.ndarray
    """
    rng = state if isinstance(state, np.random.Generator) else _generator(int(state))
    kind = law.kind
    if kind is LawKind.GAUSSIAN:
        values = rng.standard_normal(size)
    elif kind is LawKind.RADEMACHER:
        values = 2.0 * rng.integers(0, 2, size=size) - 1.0
    elif kind is LawKind.CENTERED_EXPONENTIAL:
        values = rng.standard_exponential(size) - 1.0
    else:
        values = rng.standard_t(law.df, size) * math.sqrt((law.df - 2.0) / law.df)
    return float(values) if size is None else np.asarray(values, dtype=float)


def kl_coefficients(law, seed, count):
    """
    First `count` coefficients in basis order, drawn in blocks keyed by (seed, block)

    Shared indices get identical values for every truncation level.
    """
    blocks = int(math.ceil(count / COEFFICIENT_BLOCK))
    draws = [standardized_draw(law, _generator(int(seed), block), COEFFICIENT_BLOCK)
             for block in range(blocks)]
    if not draws:
        return np.empty(0)
    return np.concatenate(draws)[:count]


@dataclass
class FieldSample:
    """Realized values u(x) at a design plus how they were generated"""

    points: object
    values: np.ndarray
    law: CoefficientLaw
    seed: int
    truncation: int = None
    params: object = None
    method: str = "karhunen_loeve"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.points):
            raise ParameterError("Sample length differs from the design size")


class KarhunenLoeveSampler:
    """Truncated KL expansion u(x) = sigma sqrt(v) sum (tau + lambda_i)^(-s/2) xi_i e_i(x)"""

    def __init__(self, params, truncation, ps):
        self.domain = ps.domain
        self.params = params.validate(ps.dimension)
        self.truncation = int(truncation)
        self.points = ps
        if self.domain is Domain.SPHERE:
            eigen = sphere_eigensystem(self.truncation)
            self.basis = spherical_harmonic_basis(self.truncation, ps.coords)
        else:
            eigen = interval_eigensystem(self.truncation)
            self.basis = interval_basis(self.truncation, ps.coords)
        v = normalization_factor(params, self.truncation, self.domain)
        self.amplitudes = (math.sqrt(params.sigma2 * v)
                           * (params.tau + eigen.eigenvalues) ** (-params.s / 2.0))
        self._loadings = self.basis * self.amplitudes

    @property
    def size(self):
        return self.amplitudes.shape[0]

    def draw(self, law, seed):
        xi = kl_coefficients(law, seed, self.size)
        return FieldSample(points=self.points, values=self._loadings @ xi, law=law,
                           seed=int(seed), truncation=self.truncation, params=self.params)


def sample_kl(params, truncation, law, ps, seed):
    """Karhunen-Loeve sample of the true field at a design"""
    return KarhunenLoeveSampler(params, truncation, ps).draw(law, seed)


def sample_gaussian_direct(model, ps, seed):
    """Exact N(0, K(x)) sample through the Cholesky factor of the Gram matrix"""
    lower = cholesky_factor(gram_matrix(model, ps))
    z = _generator(int(seed)).standard_normal(len(ps))
    return FieldSample(points=ps, values=lower @ z, law=CoefficientLaw(LawKind.GAUSSIAN),
                       seed=int(seed), truncation=getattr(model, "truncation", DEFAULT_TRUNCATION),
                       params=getattr(model, "params", None), method="cholesky",
                       metadata=model.describe())
