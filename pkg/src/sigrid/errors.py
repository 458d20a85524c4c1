"""Exception types shared across the package."""


class SigridError(Exception):
    """Base class for all errors raised by this package."""


class ImageFormatError(SigridError):
    """Unreadable, corrupt, or unsupported image file."""


class DimensionMismatchError(SigridError):
    """Two paired rasters do not share the same width/height."""


class FileFormatError(SigridError):
    """Malformed SGRD/SGPD binary payload."""
