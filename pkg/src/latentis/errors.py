"""Exception and warning types shared across latentis."""


class LatentisError(Exception):
    """Base class for all latentis runtime errors."""


class DataError(LatentisError, ValueError):
    """Malformed input data (ragged rows, non-numeric or non-finite cells)."""


class DimensionError(LatentisError, ValueError):
    """Input dimensions do not match what a model was fitted on."""


class RankError(LatentisError, ValueError):
    """A requested number of components exceeds the numerical rank."""


class ModelFormatError(LatentisError):
    """A model file is corrupted or written by an incompatible format version."""


class ModelKindError(LatentisError):
    """A model file holds a different kind of model than the one requested."""


class ImpossibleObservationError(LatentisError):
    """An observation sequence has zero probability under every state path."""


class ConvergenceWarning(UserWarning):
    """An iterative fit stopped at max_iter or hit a degenerate configuration."""
