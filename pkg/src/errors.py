"""Exception hierarchy for the study."""

from typing import Optional


class StudyError(Exception):
    """Base class for every error raised by the study code."""


class DomainError(StudyError, ValueError):
    """A physical input lies outside the modeled domain."""


class ConfigurationError(StudyError, ValueError):
    """Settings are invalid or cannot be satisfied."""


class PoolGenerationError(StudyError):
    """Too few converged matched pairs to form a pool."""


class SelectionError(StudyError):
    """No feasible dataset selection exists for a budget request."""


class ContractError(StudyError, ValueError):
    """Shapes, lengths or set relations do not match what a call requires."""


class DegenerateDenominatorError(StudyError, ArithmeticError):
    """A normalizing sum is zero."""


class MissingBaselineError(StudyError, KeyError):
    """The full high-fidelity composition cell is absent for a budget."""


class ModelFormatError(StudyError):
    """A serialized model file is malformed or has an unknown version."""


class ResultsParseError(StudyError):
    """A results file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
