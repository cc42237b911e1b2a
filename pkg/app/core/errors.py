"""
core/errors.py

Every failure the library can raise.
exit_code is what the CLI returns when the error escapes a command:
  1 = input error, 2 = invariant violation, 3 = regression mismatch.
"""

from typing import Optional


class FermiModesError(Exception):
    exit_code: int = 1


# ── Linear algebra ───────────────────────────────────────────────────────────

class DimensionMismatch(FermiModesError):
    pass


class NonHermitianInput(FermiModesError):
    pass


# ── States ───────────────────────────────────────────────────────────────────

class NotAState(FermiModesError):
    pass


class NotPositive(NotAState):
    pass


class NotNormalized(NotAState):
    pass


class NotPure(FermiModesError):
    pass


class BadWeights(FermiModesError):
    pass


class SsrViolation(FermiModesError):
    pass


# ── Fock space ───────────────────────────────────────────────────────────────

class TooManyModes(FermiModesError):
    pass


class ModeCountMismatch(FermiModesError):
    pass


class MalformedOperatorString(FermiModesError):
    pass


class CarViolation(FermiModesError):
    exit_code = 2


# ── Partial trace / mappings ─────────────────────────────────────────────────

class PartitionMismatch(FermiModesError):
    pass


class SingularSystem(FermiModesError):
    """The consistency-condition system lost rank. Always a bug, never bad input."""
    exit_code = 2


class OracleMismatch(FermiModesError):
    """Inside-out and consistency-condition traces disagree."""
    exit_code = 2


class NoMappingWitness(FermiModesError):
    pass


class SearchTooLarge(FermiModesError):
    pass


class RegressionMismatch(FermiModesError):
    exit_code = 3


# ── Text input ───────────────────────────────────────────────────────────────

class InputSyntaxError(FermiModesError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class InputSemanticError(FermiModesError):
    pass
