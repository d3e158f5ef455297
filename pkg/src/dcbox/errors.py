"""Exception taxonomy shared across the package."""

from __future__ import annotations


class DcboxError(Exception):
    """Base class for all library errors."""


class DimensionError(DcboxError, ValueError):
    """Vector lengths do not match each other or the environment's agent count."""


class ParameterError(DcboxError, ValueError):
    """A constructor or generator argument violates its preconditions."""


class QueryBudgetExceeded(DcboxError, RuntimeError):
    """A query was refused because the query budget is exhausted."""


class HammingRestrictionViolation(DcboxError, RuntimeError):
    """A query was refused because it lies outside the allowed Hamming radius."""


class InfeasibleOutputError(DcboxError, RuntimeError):
    """An algorithm returned an allocation outside its feasibility set (debug mode)."""


class ParseError(DcboxError, ValueError):
    """A document could not be parsed; carries source/line diagnostics."""

    def __init__(self, message: str, *, source: str = "<string>", line: int | None = None):
        location = source if line is None else f"{source}:{line}"
        super().__init__(f"{location}: {message}")
        self.source = source
        self.line = line


class NonMonotoneRuleError(DcboxError, RuntimeError):
    """Payment computation refused: the allocation rule is not monotone.

    Carries the monotonicity report so callers can show the violations.
    """

    def __init__(self, report):
        super().__init__(
            f"allocation rule is not monotone ({len(report.violations)} violation(s) found)"
        )
        self.report = report
