"""Exception types shared across the package."""


class AirhdcError(Exception):
    """Base class for all airhdc-specific errors."""


class DimensionError(AirhdcError, ValueError):
    """Invalid or mismatched hypervector dimensions."""


class GeometryError(AirhdcError, ValueError):
    """Package layout that cannot be realized (grid overflow, coincident antennas)."""


class ChannelFileError(AirhdcError, ValueError):
    """Malformed or inconsistent channel/assignment file."""


class InfeasibleError(AirhdcError, RuntimeError):
    """Operation requested on a constellation with no majority-aligned decision rule."""


class CalibrationError(AirhdcError, RuntimeError):
    """Noise calibration target cannot be reached."""
