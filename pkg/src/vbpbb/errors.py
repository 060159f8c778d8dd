"""Exception hierarchy shared by every module."""


class VBPBBError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(VBPBBError, ValueError):
    """An argument or data value violates a documented precondition."""


class InsufficientDataError(VBPBBError, ValueError):
    """The series is too short for the requested operation.

    ``required`` carries the minimum length when it is known.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class DataFormatError(VBPBBError):
    """Malformed input file.  ``line`` and ``column`` locate the problem."""

    def __init__(self, message, line=None, column=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        prefix = f"{', '.join(loc)}: " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.column = column
