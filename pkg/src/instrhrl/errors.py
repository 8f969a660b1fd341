"""Exception hierarchy shared by every module."""

from __future__ import annotations


class HrlError(Exception):
    """Base class for all package errors."""


class ConfigError(HrlError, ValueError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class SyntaxConfigError(ConfigError):
    """Malformed line in a key-value file."""

    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}", message)
        self.lineno = lineno


class UsageError(HrlError, RuntimeError):
    """API used out of contract, e.g. stepping a finished episode."""


class PreconditionError(HrlError, ValueError):
    pass


class CollectionError(HrlError, RuntimeError):
    """Sample collection exhausted its step budget."""

    def __init__(self, achieved: int, requested: int, budget: int) -> None:
        super().__init__(
            f"collected {achieved} unique samples of {requested} requested "
            f"within a budget of {budget} steps"
        )
        self.achieved = achieved


class TrainingError(HrlError, ValueError):
    pass


class NumericalError(HrlError, ArithmeticError):
    pass
