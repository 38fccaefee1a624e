"""Exception types shared across the package."""


class PlyParseError(ValueError):
    """Malformed PLY input. Carries the offending element index when known."""

    def __init__(self, message, element=None):
        if element is not None:
            message = f"{message} (element {element})"
        super().__init__(message)
        self.element = element


class SchemaError(ValueError):
    """Invalid material JSON. Carries the offending field path."""

    def __init__(self, message, path=""):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class AnalysisError(RuntimeError):
    """Material analysis reply could not be used. Carries the raw reply."""

    def __init__(self, message, raw_reply=None):
        super().__init__(message)
        self.raw_reply = raw_reply


class TransportError(RuntimeError):
    """Remote analysis endpoint unreachable or unhealthy; safe to retry."""

    retriable = True


class SimulationFault(RuntimeError):
    """Non-finite state detected while stepping. Carries the frame index."""

    def __init__(self, message, frame=None):
        if frame is not None:
            message = f"{message} (frame {frame})"
        super().__init__(message)
        self.frame = frame


class BuildError(RuntimeError):
    """A bundle build stage failed. Carries the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
