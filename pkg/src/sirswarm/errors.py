"""Exception types shared across the package.

Everything raised on purpose derives from SirSwarmError so callers can
catch one base class at CLI and service boundaries.
"""

from __future__ import annotations


class SirSwarmError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SirSwarmError):
    """A configuration value failed validation.

    Carries the offending field name so front ends can point at the
    exact knob instead of echoing a generic message.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ScenarioError(SirSwarmError):
    """A scenario file could not be parsed or contained unknown keys."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PlacementError(SirSwarmError):
    """Initial agent placement gave up after too many rejected samples."""

    def __init__(self, placed: int, attempts: int):
        self.placed = placed
        self.attempts = attempts
        super().__init__(
            f"placed {placed} agents after {attempts} attempts; "
            "arena too crowded for the requested separation"
        )


class DegeneratePairError(SirSwarmError):
    """Two agents share the exact same position, so no separating
    direction exists for their pairwise constraint."""

    def __init__(self, i: int | None = None, j: int | None = None):
        self.i = i
        self.j = j
        if i is None or j is None:
            super().__init__("coincident positions")
        else:
            super().__init__(f"agents {i} and {j} are coincident")


class QpFailureError(SirSwarmError):
    """The active-set solve hit its iteration cap without converging.

    best_iterate and max_violation describe the last point reached so
    the caller can fall back or report how close the solve got.
    """

    def __init__(self, iterations: int, best_iterate, max_violation: float):
        self.iterations = iterations
        self.best_iterate = best_iterate
        self.max_violation = max_violation
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(worst constraint violation {max_violation:.3e})"
        )


class IntegrationError(SirSwarmError):
    """Numerical integration produced a non-finite state."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite state at step {step}")


class EnsembleError(SirSwarmError):
    """One member of an ensemble failed; carries the seed that did."""

    def __init__(self, seed: int, cause: Exception):
        self.seed = seed
        super().__init__(f"run with seed {seed} failed: {cause}")
