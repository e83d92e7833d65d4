"""Exception hierarchy shared across the package.

Every error raised by mailtriage code derives from MailTriageError so the
CLI and the service can map failures onto exit codes / HTTP statuses in one
place.
"""

from __future__ import annotations


class MailTriageError(Exception):
    """Base class for all package errors."""


class StoreError(MailTriageError):
    """Corpus store failure (I/O, validation, registry)."""


class EmptyCorpusError(StoreError):
    """Statistics requested on a store that holds no documents."""


class UnknownCategoryError(StoreError):
    """A category id does not resolve in the registry."""


class NotTrainableError(StoreError):
    """Fewer than two learnable categories: no training snapshot possible."""


class FeatureSpaceError(MailTriageError):
    """Relevancy-vector construction failed (degenerate training input)."""


class LearnerError(MailTriageError):
    """Classifier fitting rejected its input."""


class PredictError(LearnerError):
    """Prediction input incompatible with the trained model."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"vector length {actual} does not match model feature count {expected}"
        )


class ModelIOError(MailTriageError):
    """Model (de)serialization failure or fingerprint/version mismatch."""


class EvalError(MailTriageError):
    """Evaluation harness failure (bad preset, bad grid arguments)."""


class ConfigError(MailTriageError):
    """Malformed configuration file or unknown configuration key."""
