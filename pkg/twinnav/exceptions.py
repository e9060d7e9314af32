class TwinNavError(Exception):
    """Base class for every error raised by twinnav."""


class PointBehindCamera(TwinNavError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class LandmarkBehindCamera(PointBehindCamera):
    pass


class NotARotation(TwinNavError):
    pass


class InsufficientPoints(TwinNavError):
    pass


class DegenerateConfiguration(TwinNavError):
    pass


class Diverged(TwinNavError):
    pass


class DimensionMismatch(TwinNavError):
    pass


class NameMismatch(TwinNavError):
    pass


class CollinearPoints(TwinNavError):
    pass


class TooSmall(TwinNavError):
    pass


class BadConfig(TwinNavError):
    pass


class InsufficientViews(TwinNavError):
    pass


class FormatError(TwinNavError):
    """Malformed PPM, PLY, checkpoint or JSON content."""


class FrameError(TwinNavError):
    """A pipeline stage failed on a specific frame."""

    def __init__(self, frame, cause):
        super().__init__(f"frame {frame}: {type(cause).__name__}: {cause}")
        self.frame = frame
        self.cause = cause


class DegenerateIsoWarning(UserWarning):
    pass
