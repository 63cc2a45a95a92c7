"""Exception hierarchy shared across the package."""


class PathwiseError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PathwiseError, ValueError):
    """An argument violates a documented precondition."""


class ResolutionError(ParameterError):
    """A partition or level request exceeds the path's sampling resolution."""


class CoverageError(ParameterError):
    """A spatial grid or measure does not cover the required range."""


class IngestionError(PathwiseError, ValueError):
    """A user-supplied path file is missing, malformed or inconsistent."""


class GenerationError(PathwiseError, RuntimeError):
    """Path synthesis produced invalid (non-finite) samples."""


class ConfigError(PathwiseError, ValueError):
    """An experiment configuration failed validation."""
