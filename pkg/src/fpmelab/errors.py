"""Error types shared across the package.

Every failure mode that callers are expected to handle gets its own class;
the CLI maps them onto exit codes (2 validation, 3 solver, 4 invariant).
"""


class FpmeError(Exception):
    """Base class for all package errors."""


class ValidationError(FpmeError):
    """Bad user input: domains, parameters, config files."""


class InvalidDomainError(ValidationError):
    """Degenerate interval or too few nodes."""


class GridMismatchError(ValidationError):
    """Operands live on different grids."""


class ParamsMismatchError(ValidationError):
    """Energy parameters inconsistent with an assembled form."""


class DomainBoundaryError(ValidationError):
    """Evaluation requested at or outside the interval endpoints."""


class NonpositiveTimeError(ValidationError):
    """A strictly positive time was required."""


class StepTooLargeError(ValidationError):
    """Time step violates the strict convexity condition h * alpha < 1."""


class SolverError(FpmeError):
    """An iterative solver failed to reach its tolerance."""


class NoConvergenceError(SolverError):
    """Iteration cap reached before the stopping criterion."""


class InnerNoConvergenceError(SolverError):
    """The per-step convex subproblem solver failed to converge."""


class InvariantViolationError(FpmeError):
    """A structural invariant failed beyond its tolerance."""


class AssemblyFailureError(InvariantViolationError):
    """Assembled stiffness matrix violates a structural invariant."""


class InvalidLedgerError(InvariantViolationError):
    """An evolution ledger is unusable (aborted or inconsistent)."""


class MissingFileError(ValidationError):
    """A referenced input file does not exist."""
