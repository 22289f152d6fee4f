"""Exception types shared across the package."""


class AirbenchError(Exception):
    """Base class for all airbench errors."""


class ValidationError(AirbenchError):
    """A sample, dataset, or prediction violates a data invariant."""


class FormatError(AirbenchError):
    """An on-disk file is missing, malformed, or inconsistent with its manifest."""


class ParameterError(AirbenchError):
    """Physical or generation parameters are invalid or degenerate."""


class DomainError(AirbenchError):
    """An input lies outside the domain of an operation."""


class SingularityError(AirbenchError):
    """A field was requested too close to a singular point of the mapping."""


class GeometryError(AirbenchError):
    """A surface contour is open, degenerate, or self-intersecting."""


class ShapeError(AirbenchError):
    """Array arguments have incompatible lengths or shapes."""


class CoverageError(AirbenchError):
    """Predictions do not cover the dataset samples one-to-one."""


class ConfigError(AirbenchError):
    """A scoring or generation configuration is invalid."""


class TrainingError(AirbenchError):
    """A training command failed (nonzero exit status)."""


class InferenceError(AirbenchError):
    """A predictor failed to produce usable predictions."""
