"""Exception hierarchy shared across the package."""


class Vlm6dError(Exception):
    """Base class for all package errors."""


class ContractError(Vlm6dError):
    """An input violated a documented shape or dimension contract."""


class ConfigError(Vlm6dError):
    """Invalid or inconsistent configuration."""


class EmptyCloudError(Vlm6dError):
    """An operation received or produced a point cloud with zero points."""


class NonPositiveDepthError(Vlm6dError):
    """Projection requested for a point with z <= 0."""


class InsufficientPointsError(Vlm6dError):
    """Fewer points than the operation requires."""


class DegenerateRotationError(Vlm6dError):
    """6D rotation input is degenerate (zero or collinear basis vectors)."""


class DegenerateSampleError(Vlm6dError):
    """A training/eval sample has too little valid depth to be usable."""


class UndefinedRecallError(Vlm6dError):
    """Recall requested over an empty error list."""


class IngestionError(Vlm6dError):
    """A dataset file is missing or malformed; message names the path."""


class IncompatibleWeightsError(Vlm6dError):
    """A checkpoint tensor does not match the model; message names it."""
