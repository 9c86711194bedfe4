"""Exception hierarchy shared by all modules."""


class PachnerError(Exception):
    """Base class for every error raised by the package."""


class TriangulationError(PachnerError, ValueError):
    """A gluing table does not describe a valid closed triangulation."""


class NonInvolutive(TriangulationError):
    pass


class Unglued(TriangulationError):
    pass


class NotManifold(TriangulationError):
    """Raised when a face is self-identified or a vertex link is not a sphere.

    ``orbit`` holds ``(face_dim, facet, local_vertices)`` for the offending
    face when one can be named.
    """

    def __init__(self, message, orbit=None):
        super().__init__(message)
        self.orbit = orbit


class UnsupportedKind(PachnerError, ValueError):
    pass


class WrongDimension(PachnerError, ValueError):
    pass


class InvalidSite(PachnerError, ValueError):
    pass


class MalformedSignature(PachnerError, ValueError):
    pass


class DomainError(PachnerError, ValueError):
    pass


class InsufficientSupport(PachnerError, ValueError):
    pass


class NoPlateau(PachnerError, ValueError):
    pass


class GapInCurve(PachnerError, ValueError):
    pass


class TooLarge(PachnerError, ValueError):
    pass


class SinkFailure(PachnerError, RuntimeError):
    pass


class FormatError(PachnerError, ValueError):
    """A text file (gluing list, census, log) could not be parsed."""


class ConfigError(PachnerError, ValueError):
    """Chain or experiment parameters are inconsistent."""
