"""Exception hierarchy shared by all saliqa modules."""


class SaliqaError(Exception):
    """Base class for every error raised by saliqa."""


class ParameterError(SaliqaError, ValueError):
    """An argument is out of range or shapes do not line up."""


class DegenerateMapError(SaliqaError, ValueError):
    """A map or vector is constant / zero-sum where that is not allowed."""


class DataError(SaliqaError, ValueError):
    """Input data contains non-finite values."""


class FormatError(SaliqaError, ValueError):
    """A file decodes but its layout is not supported."""


class GraphError(SaliqaError, ValueError):
    """The pairwise comparison graph is not connected."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class SchemaError(SaliqaError, ValueError):
    """A CSV file lacks a required column."""


class ValidationError(SaliqaError, ValueError):
    """Manifest records reference missing files or inconsistent values."""
