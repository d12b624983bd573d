class XRError(Exception):
    """Base class for every error raised by xrepair."""


class SchemaError(XRError):
    pass


class ParseError(XRError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


class PreconditionError(XRError):
    """Input falls outside the class an operation supports."""


class ResourceError(XRError):
    """A configured size cap was exceeded."""


class InvariantViolation(XRError):
    """Internal consistency check failed. Always a bug."""
