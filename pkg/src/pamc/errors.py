"""Exception types shared across the package."""

from __future__ import annotations


class IntegrationOverflowError(RuntimeError):
    """A trajectory left the finite floating-point range.

    ``step_index`` is the integration step at which the first non-finite
    value appeared.
    """

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class ChainDivergenceError(RuntimeError):
    """A Markov chain produced a non-finite state or action."""


class ConfigError(ValueError):
    """A run configuration file is missing, malformed, or inconsistent."""
