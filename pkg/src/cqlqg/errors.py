"""Exception hierarchy for the cqlqg package."""


class CqlqgError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(CqlqgError, ValueError):
    """Matrix shapes are inconsistent with the requested operation."""


class ValidationError(CqlqgError, ValueError):
    """A value violates a structural invariant (symmetry, rank, finiteness...)."""


class NumericError(CqlqgError):
    """A numerical routine failed or produced an unreliable result."""


class StabilityError(CqlqgError):
    """An operation requires a Hurwitz matrix and did not get one."""


class DegenerateEquationError(NumericError):
    """A linear matrix equation is singular (e.g. resonant spectrum)."""


class ParseError(CqlqgError):
    """A problem or parameter file is malformed."""


class NoStabilizerError(CqlqgError):
    """Random search failed to find a stabilizing controller.

    Attributes:
        attempts: number of draws that were tried before giving up.
    """

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class BacktrackExhaustedError(CqlqgError):
    """The Armijo backtracking loop ran out of stepsize candidates.

    Theoretically impossible for a smooth cost with sigma < 1; in practice it
    signals severe ill-conditioning near the stability boundary.
    """

    def __init__(self, message: str, backtracks: int):
        super().__init__(message)
        self.backtracks = backtracks
