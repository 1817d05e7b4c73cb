"""Error taxonomy for data loading and training."""


class TrainerError(Exception):
    """Base class for all trainer failures."""


class MissingSplitKeyError(TrainerError):
    """A split references a record absent from the loaded data."""


class EncoderLoadError(TrainerError):
    """The configured encoder name cannot be instantiated."""


class DimensionMismatchError(TrainerError):
    """A feature block does not have its declared width."""


class IncompleteMatrixError(TrainerError):
    """The run x fold result matrix has holes or bad cells."""
