"""Exception hierarchy shared across the pipeline."""


class RoadforgeError(Exception):
    """Base class for all pipeline errors."""


class PointBehindCamera(RoadforgeError):
    """World point has non-positive depth in the camera frame."""


class PointAtInfinity(RoadforgeError):
    """Projective mapping sent the point to the plane at infinity."""


class DegenerateConfiguration(RoadforgeError):
    """Input geometry does not determine a unique solution."""


class NoConvergence(RoadforgeError):
    """Iterative solver hit its iteration cap with a bad residual."""


class DimensionMismatch(RoadforgeError):
    """Images or buffers with incompatible shapes."""


class EmptyInput(RoadforgeError):
    """An operation received an empty collection where >=1 item is required."""


class InsufficientBackgrounds(RoadforgeError):
    """A sampling plan asked for more backgrounds than a bucket holds."""


class InvalidNetwork(RoadforgeError):
    """Lane network fails connectivity or geometry validation."""


class ParseError(RoadforgeError):
    """Mesh file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyMesh(RoadforgeError):
    """Mesh file contained no usable geometry."""


class InconsistentInputs(RoadforgeError):
    """Render result and instance list disagree."""


class SchemaError(RoadforgeError):
    """A JSON document violates its schema; carries a JSON pointer."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer


class EmptyMask(RoadforgeError):
    """Crop mask has no foreground pixels."""


class EmptyRing(RoadforgeError):
    """No background ring pixels available around a mask."""


class ProtocolViolation(RoadforgeError):
    """External translation tool broke the crop exchange contract."""


class UnknownImageId(RoadforgeError):
    """Detection references an image id absent from the manifest."""
