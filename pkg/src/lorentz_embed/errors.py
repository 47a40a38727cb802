"""Exception types shared across the package.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``NumericError`` and
``BoundaryError`` -> 3.
"""


class LorentzEmbedError(Exception):
    """Base class for all package errors."""


class DataError(LorentzEmbedError, ValueError):
    """Malformed, inconsistent or missing input data."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class CycleError(DataError):
    """A taxonomy that should be acyclic contains a cycle."""

    def __init__(self, cycle, *, path=None):
        self.cycle = list(cycle)
        shown = " -> ".join(str(c) for c in self.cycle)
        super().__init__(f"cycle detected: {shown}", path=path)


class NumericError(LorentzEmbedError, ArithmeticError):
    """Non-finite values showed up during optimization."""


class BoundaryError(LorentzEmbedError, ValueError):
    """A point lies on or outside the boundary of its model (or off the hyperboloid)."""
