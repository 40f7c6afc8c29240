"""Exception hierarchy shared across the pipeline."""


class StairliftError(Exception):
    """Base class for all pipeline errors."""


class UnknownLabelError(StairliftError, ValueError):
    """Label text does not match any of the five activity classes."""


class NonFiniteInputError(StairliftError, ValueError):
    """A numeric input was NaN or infinite."""


class MissingColumnError(StairliftError, ValueError):
    """A required CSV column is absent from the header."""


class MalformedRowError(StairliftError, ValueError):
    """A CSV data row is structurally broken (wrong field count)."""

    def __init__(self, row_index: int, message: str):
        self.row_index = row_index
        super().__init__(f"row {row_index}: {message}")


class NonMonotonicTimeError(StairliftError, ValueError):
    """Timestamps are not strictly increasing."""


class TooFewSamplesError(StairliftError, ValueError):
    """An operation needs more samples than were provided."""


class InvalidParamsError(StairliftError, ValueError):
    """Non-positive or otherwise invalid windowing parameters."""


class EmptyDatasetError(StairliftError, ValueError):
    """Dataset contains no vectors."""


class DegenerateDataError(StairliftError, ValueError):
    """Training data contains a single class."""


class ArityMismatchError(StairliftError, ValueError):
    """Feature vector length does not match the model."""


class InsufficientDataError(StairliftError, ValueError):
    """Not enough samples per class for the requested cross-validation."""


class SingleParticipantError(StairliftError, ValueError):
    """Leave-one-subject-out needs at least two participants."""


class LengthMismatchError(StairliftError, ValueError):
    """Paired sequences have different lengths."""


class EmptyInputError(StairliftError, ValueError):
    """An operation received an empty sequence."""


class InvalidConfigError(StairliftError, ValueError):
    """Synthetic-cohort configuration is out of range."""
