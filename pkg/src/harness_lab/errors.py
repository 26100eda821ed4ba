"""Exception types shared across the package.

Every error carries a human-readable message naming the violated
requirement; nothing here is recoverable state.
"""


class HarnessLabError(Exception):
    """Base class for all package errors."""


# ---- weight vector validation ----

class NegativeWeight(HarnessLabError):
    """A probability entry is negative."""


class MassNotOne(HarnessLabError):
    """Probabilities do not sum to 1 within tolerance."""


class DegenerateSupport(HarnessLabError):
    """Support is a single point, so the step variance vanishes."""


class SpanNotOne(HarnessLabError):
    """Support differences generate a sublattice coarser than the integers."""


class WindowTooLarge(HarnessLabError):
    """A requested support width exceeds the representable budget."""


# ---- potential kernel / covariance ----

class QuadratureFailure(HarnessLabError):
    """Adaptive quadrature could not certify the requested tolerance."""


class SeriesBudgetExceeded(HarnessLabError):
    """Partial-sum budget ends before the tail bound meets the tolerance."""


class TableTooSmall(HarnessLabError):
    """A potential table does not cover the requested lag."""


class TruncationTooCoarse(HarnessLabError):
    """Requested sampling accuracy is unreachable at the given truncation."""


# ---- limit law ----

class SpecMismatch(HarnessLabError):
    """Parameter bundle violates the relation assumed by the formula."""


# ---- simulation ----

class WindowTooSmall(HarnessLabError):
    """Field window cannot certify exact values at the requested sites."""


# ---- scenarios / budgets ----

class UnknownKind(HarnessLabError):
    """Scenario kind is not one of the supported names."""


class IncompleteParams(HarnessLabError):
    """Scenario parameters are missing required entries."""


class MeanNotZero(HarnessLabError):
    """Step law must be centered for this computation."""


class BudgetExceeded(HarnessLabError):
    """Requested computation exceeds the configured resource budget."""


# ---- experiment configuration ----

class ConfigParseError(HarnessLabError):
    """Configuration file is not parseable."""


class ValidationError(HarnessLabError):
    """Configuration parsed but a field is invalid; names the field."""
