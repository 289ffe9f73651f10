"""Exception hierarchy with stable machine-readable codes.

Every error that can surface at the CLI boundary carries a short ``code``
string and a process exit status, so scripted callers can branch on the
failure mode without parsing messages.
"""

from __future__ import annotations


class SchrosimError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "error"
    exit_status = 1


class InvalidInputError(SchrosimError):
    code = "invalid-input"
    exit_status = 2


class ParseError(SchrosimError):
    """Matrix Market / vector file parse failure. Carries the 1-based line."""

    code = "parse-error"
    exit_status = 3

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(SchrosimError):
    code = "dimension-mismatch"
    exit_status = 4


class JacobiInapplicableError(SchrosimError):
    """A has a zero diagonal entry; the diagonal split cannot be inverted."""

    code = "zero-diagonal"
    exit_status = 5


class ConvergenceUnsafeError(SchrosimError):
    """Iteration matrix not certified contractive (no diagonal dominance)."""

    code = "convergence-unsafe"
    exit_status = 6


class NoGapError(SchrosimError):
    """Degenerate or vanishing spectral gap; stopping-time bounds undefined."""

    code = "no-gap"
    exit_status = 7


class DegenerateStateError(SchrosimError):
    """Augmented state with (near-)zero last entry cannot be de-augmented."""

    code = "degenerate-state"
    exit_status = 8


class DegenerateRecoveryError(SchrosimError):
    """Recovered amplitude vector has vanishing norm."""

    code = "degenerate-recovery"
    exit_status = 9


class UnreachableStateError(SchrosimError):
    """Initial state has zero overlap with the target eigenvector."""

    code = "unreachable-state"
    exit_status = 10


class SingularMatrixError(SchrosimError):
    code = "singular-matrix"
    exit_status = 11


class NumericalError(SchrosimError):
    """Dense eigensolver or factorisation failed to converge."""

    code = "numerical-failure"
    exit_status = 12
