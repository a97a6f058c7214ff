"""Exception types shared across the package.

Every numerical routine either returns a finite float or raises one of
these; NaNs are never propagated silently.
"""

from __future__ import annotations


class IrsThzError(Exception):
    """Base class for all package errors."""


class DomainError(IrsThzError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericError(IrsThzError, ArithmeticError):
    """A numerical procedure failed to converge or lost all accuracy.

    Carries optional diagnostics (last iterates, residues) in ``info``.
    """

    def __init__(self, message: str, **info):
        super().__init__(message)
        self.info = dict(info)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        base = super().__str__()
        if self.info:
            extras = ", ".join(f"{k}={v!r}" for k, v in self.info.items())
            return f"{base} [{extras}]"
        return base


class ConsistencyError(IrsThzError, RuntimeError):
    """An internal cross-check failed (should not happen for valid inputs)."""


class ConfigError(IrsThzError, ValueError):
    """Scenario configuration is invalid; names the offending key."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        loc = ""
        if key is not None:
            loc += f" (key: {key}"
            if line is not None:
                loc += f", line {line}"
            loc += ")"
        super().__init__(message + loc)
        self.key = key
        self.line = line


class TrainingError(IrsThzError, RuntimeError):
    """Surrogate training diverged; carries the loss trajectory."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = list(trajectory or [])
