"""Exception types shared across the toolkit."""
from __future__ import annotations


class SlowPatternsError(Exception):
    """Base class for all toolkit errors."""


class ExpressionError(SlowPatternsError):
    """Malformed expression source (carries the offending position)."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownSymbolError(ExpressionError):
    """Expression references a symbol that is neither U, V nor a declared parameter."""


class ModelError(SlowPatternsError):
    """Invalid model definition (unknown builtin, parameter mismatch, bad tau)."""


class EvaluationDomainError(SlowPatternsError):
    """Model evaluation left its real domain (division by zero, log of negative, ...)."""


class BranchError(SlowPatternsError):
    """Slow-manifold branch construction failed (no roots, fold handling, ...)."""


class NormalHyperbolicityError(SlowPatternsError):
    """F_u(f(v), v) is not negative and bounded away from zero on the requested interval."""

    def __init__(self, message: str, v_violation: float | None = None):
        self.v_violation = v_violation
        super().__init__(message)


class ClassificationError(SlowPatternsError):
    """The reduced flow does not have the assumed double-well structure."""


class WellBalanceError(SlowPatternsError):
    """Well depths are incompatible with the requested profile kind."""


class LevelSetError(SlowPatternsError):
    """A reduced-flow level set is empty or leaves the real domain."""


class SolverError(SlowPatternsError):
    """A linear/nonlinear solve failed or violated its acceptance tolerance."""


class TailFitError(SlowPatternsError):
    """Tail-template fit failed its quality gate (wrong growth index or truncation)."""


class RegimeError(SlowPatternsError):
    """Requested asymptotic formula outside its regime of validity."""


class ConfigError(SlowPatternsError):
    """Run configuration failed schema validation."""
