"""Semantic exception hierarchy.

Every error raised intentionally by this package derives from FairsteerError,
so callers (and the CLI) can distinguish domain failures from genuine bugs.
Names mirror the failure they report rather than the module that raises them.
"""

from __future__ import annotations

__all__ = [
    "FairsteerError",
    "InputValidationError",
    "DegenerateStd",
    "SingularCovariance",
    "DegenerateCost",
    "DimensionMismatch",
    "LengthMismatch",
    "EmptyCell",
    "NonPositiveFeature",
    "NegativeKL",
    "WeightsMismatch",
    "KeyMismatch",
    "UnknownGroup",
    "MissingCell",
    "QuadratureFailure",
    "WeightRatioViolation",
    "SearchDiverged",
    "NoConvergence",
    "ParseError",
]


class FairsteerError(Exception):
    """Base class for all domain errors raised by this package."""


class InputValidationError(FairsteerError, ValueError):
    """A constructor or operation received structurally invalid input."""


class DegenerateStd(InputValidationError):
    """A standard deviation is zero, negative, or numerically collapsed."""


class SingularCovariance(InputValidationError):
    """A covariance matrix is not symmetric positive definite."""


class DegenerateCost(InputValidationError):
    """Cost matrix violates c10 > c00 and c01 > c11, so no threshold in (0,1) exists."""


class DimensionMismatch(InputValidationError):
    """Feature dimensions of two objects disagree, or exceed a supported cap."""


class LengthMismatch(InputValidationError):
    """Parallel sequences (labels, groups, predictions) have different lengths."""


class EmptyCell(InputValidationError):
    """A (class, group) cell has too few samples to estimate moments."""


class NonPositiveFeature(InputValidationError):
    """A log transform was requested but a feature value is not strictly positive."""


class NegativeKL(InputValidationError):
    """A KL divergence argument is negative beyond numerical tolerance."""


class WeightsMismatch(FairsteerError):
    """Two distributions carry different joint weights where identical ones are required."""


class KeyMismatch(FairsteerError):
    """Two distributions are indexed by different (class, group) key sets."""


class UnknownGroup(FairsteerError):
    """A group label is not part of the distribution."""


class MissingCell(FairsteerError):
    """A required (class, group) entry is absent from a map or moment table."""


class QuadratureFailure(FairsteerError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class WeightRatioViolation(FairsteerError):
    """Joint weights violate q10/q00 = q11/q01; reweigh explicitly before steering."""


class SearchDiverged(FairsteerError):
    """A line search hit its grid boundary; the search range must be widened."""


class NoConvergence(FairsteerError):
    """An iterative optimizer stopped before reaching its tolerance.

    Raised only when no usable iterate exists at all; optimizers that can
    return a best-effort iterate flag non-convergence on the result instead.
    """


class ParseError(FairsteerError):
    """A spec, scenario, matrix, or labels file could not be parsed."""
