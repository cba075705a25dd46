"""Exception hierarchy shared by every seawake module."""


class SeawakeError(Exception):
    """Base class for all errors raised by seawake."""


class ParseError(SeawakeError, ValueError):
    """A telemetry row could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(SeawakeError, ValueError):
    pass


class ValidationError(SeawakeError, ValueError):
    pass


class EmptyWindowError(SeawakeError, ValueError):
    pass


class OutOfRangeError(SeawakeError, ValueError):
    pass


class UnknownVesselError(SeawakeError, KeyError):
    def __str__(self):
        # KeyError repr-quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class ScaleUndefinedError(SeawakeError, ValueError):
    pass


class AnnotationError(SeawakeError, ValueError):
    pass


class GeometryError(SeawakeError, ValueError):
    pass


class ContractError(SeawakeError, ValueError):
    pass


class AnchoringError(SeawakeError, ValueError):
    pass


class SchemaError(SeawakeError, ValueError):
    """A structured document violates its schema; ``path`` names the offending node."""

    def __init__(self, message, path=""):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DegenerateAnnotationWarning(UserWarning):
    """Two annotated centres coincide although their GPS fixes do not."""


class OutOfFrameWarning(UserWarning):
    """A trajectory leaves the frame rectangle."""
