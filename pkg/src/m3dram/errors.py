"""Exception types shared across the toolkit."""


class M3DramError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfig(M3DramError):
    """A configuration value is out of range or inconsistent."""


class NonConvergence(M3DramError):
    """A transient simulation failed to reach its stop criterion in time.

    Usually a sign of broken electrical parameters (e.g. a latch too weak
    to ever cross the sensing threshold).
    """


class CalibrationFailure(M3DramError):
    """Fitted model misses a reference point beyond the allowed tolerance."""

    def __init__(self, message, worst_row=None):
        super().__init__(message)
        self.worst_row = worst_row


class Underdetermined(M3DramError):
    """Too few (or degenerate) points to fit the requested model."""


class InconsistentInputs(M3DramError):
    """Derived inputs passed together do not belong to the same organization."""


class TraceParseError(M3DramError):
    """Malformed trace line."""

    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class OrderViolation(TraceParseError):
    """Trace cycles decreased between consecutive records."""


class TimingViolation(M3DramError):
    """A scheduled command violates a DRAM timing constraint.

    Raised by internal scheduler assertions and by the independent
    command-log validator; must never fire on a correct run.
    """


class InvalidStats(M3DramError):
    """Statistics aggregation asked to divide by zero (empty run, etc.)."""
