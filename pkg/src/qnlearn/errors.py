"""Exception types shared across the toolkit."""


class QnLearnError(Exception):
    """Base class for all toolkit-specific errors."""


class ShapeError(QnLearnError, ValueError):
    """An array has the wrong shape for the requested operation."""


class DimensionError(QnLearnError, ValueError):
    """A problem dimension is out of the supported range."""


class SymmetryViolation(QnLearnError, ValueError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class EigenFailure(QnLearnError, RuntimeError):
    """The eigensolver did not converge within its sweep cap."""


class EvalError(QnLearnError, RuntimeError):
    """An objective or gradient evaluation produced a non-finite value."""


class SingularError(QnLearnError, RuntimeError):
    """A linear system required to be solvable is singular."""


class ParseError(QnLearnError, ValueError):
    """Malformed input text.  Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RoleError(QnLearnError, ValueError):
    """A state entry has no declared transformation role."""


class CapabilityError(QnLearnError, RuntimeError):
    """A required optional capability (hessian, eigen data, ...) is missing."""


class LineSearchFailure(QnLearnError, RuntimeError):
    """Backtracking exhausted its budget without satisfying the descent test."""

    def __init__(self, message, last_trial=None):
        super().__init__(message)
        self.last_trial = last_trial


class StationaryStartError(QnLearnError, ValueError):
    """The two starting points have (numerically) identical gradients."""


class DivergenceError(QnLearnError, RuntimeError):
    """An iterate went non-finite.  Carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NonFiniteLoss(QnLearnError, RuntimeError):
    """The unrolled training loss went non-finite at some iterate."""

    def __init__(self, message, iterate_index=None):
        super().__init__(message)
        self.iterate_index = iterate_index


class TrainingDiverged(QnLearnError, RuntimeError):
    """A whole training epoch produced no usable update."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class FormatError(QnLearnError, ValueError):
    """A serialized artifact fails validation (shape, version, count)."""
