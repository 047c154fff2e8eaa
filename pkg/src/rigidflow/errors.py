"""Exception hierarchy, grouped by the exit code the CLI maps them to."""


class RigidFlowError(Exception):
    """Base class for all package errors."""


class ConfigError(RigidFlowError):
    """Bad configuration or usage (CLI exit code 1)."""


class DataError(RigidFlowError):
    """Missing or malformed input data (CLI exit code 2)."""


class FormatError(DataError):
    """A file exists but does not match its expected encoding."""


class NumericError(RigidFlowError):
    """Numerical failure during optimization (CLI exit code 3)."""


class BehindCameraError(NumericError):
    """A 3D point has non-positive depth where positive depth is required."""


class InvalidDisparityError(NumericError):
    """A disparity value is at or below the usable minimum."""


class DegenerateGeometryError(NumericError):
    """Too few points, or a point configuration that cannot pin down a motion."""


class RankDeficientError(NumericError):
    """The normal equations stay singular even at maximum damping."""
