#!/usr/bin/env python3
"""
Study Errors
Exception types shared by the Whittle-Matern study library
"""


class WhittleMaternError(Exception):
    """Root of every error raised by the study library"""


class InvalidArgumentError(WhittleMaternError, ValueError):
    """Argument outside the admissible range (counts, degrees, grids)"""


class DomainMismatchError(WhittleMaternError, ValueError):
    """Points or models living on different domains"""


class ParameterError(WhittleMaternError, ValueError):
    """Kernel or law parameters outside their validity region"""


class DivergenceError(ParameterError):
    """Series or tail sum that does not converge for the given parameters"""


class DegenerateDesignError(WhittleMaternError, ValueError):
    """Design too small for the requested diagnostic"""


class DuplicatePointsError(WhittleMaternError, ValueError):
    """Design with coincident points (Gram matrix would be singular)"""


class NearSingularError(WhittleMaternError, ArithmeticError):
    """Cholesky breakdown on a Gram matrix"""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class EstimationFailedError(WhittleMaternError, RuntimeError):
    """No admissible maximizer of the likelihood was found"""


class UnsupportedLawError(WhittleMaternError, ValueError):
    """Coefficient law without the structure an operation needs"""


class ConfigError(WhittleMaternError, ValueError):
    """Invalid study configuration; lists every offending key"""

    def __init__(self, message, keys=()):
        self.keys = list(keys)
        if self.keys:
            message = f"{message}: {', '.join(self.keys)}"
        super().__init__(message)


class PlotError(WhittleMaternError, ValueError):
    """Input that cannot be rendered into a figure"""
