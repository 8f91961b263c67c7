"""Exception types raised across the package."""

import numpy as np


class CurveReconcileError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(CurveReconcileError, ValueError):
    pass


class InvalidArgumentError(CurveReconcileError, ValueError):
    pass


class InsufficientDataError(CurveReconcileError, ValueError):
    pass


class DivisionError(CurveReconcileError, ZeroDivisionError):
    """A zero denominator was hit.

    ``index`` is the 1-based position (level or column) that owns the
    offending denominator.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularMatrixError(CurveReconcileError, np.linalg.LinAlgError):
    """A covariance matrix could not be factorized as positive definite."""

    def __init__(self, message, estimator=None):
        super().__init__(message)
        self.estimator = estimator


class ConvergenceError(CurveReconcileError, RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DegenerateSeriesError(CurveReconcileError, ValueError):
    pass


class EmptyInputError(CurveReconcileError, ValueError):
    pass


class InvalidPriceError(CurveReconcileError, ValueError):
    pass


class DegenerateCurveError(CurveReconcileError, ValueError):
    pass


class NoEquilibriumError(CurveReconcileError):
    pass
