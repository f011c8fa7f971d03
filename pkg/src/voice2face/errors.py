"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, checkpoint problems with 4.
"""


class Voice2FaceError(Exception):
    """Base class for all package errors."""


class InvalidInputError(Voice2FaceError):
    """An argument has the wrong shape, range, or value."""


class ZeroEnergyError(InvalidInputError):
    """Audio input is silent; RMS normalization is undefined."""


class InsufficientDataError(Voice2FaceError):
    """The dataset is too small for the requested operation."""


class InvalidQueryError(Voice2FaceError):
    """A retrieval query references a speaker absent from the gallery."""


class ConfigurationError(Voice2FaceError):
    """Configuration is missing, inconsistent, or points at absent files."""


class CheckpointError(Voice2FaceError):
    """A checkpoint is missing, has the wrong version, or does not match
    the architecture it is being loaded into."""
