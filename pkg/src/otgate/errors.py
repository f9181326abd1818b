"""Exception types raised across the package."""


class OTGateError(Exception):
    """Base class for all package errors."""


class ArgumentError(OTGateError, ValueError):
    """Invalid input: wrong shapes, unnormalized weights, non-SPD matrices."""


class ConvergenceError(OTGateError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EmptySummaryError(OTGateError, ValueError):
    """No cluster survived the minimum-size filter."""


class EmptyTemplateError(OTGateError, ValueError):
    """Template formation discarded every cluster."""


class ConfigurationError(OTGateError, ValueError):
    """A pipeline option is incompatible with the data it is applied to."""


class SchemaError(OTGateError, ValueError):
    """A serialized file does not match the expected schema or version."""


class ParseError(OTGateError, ValueError):
    """A CSV cell could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class GenerationError(OTGateError, RuntimeError):
    """A synthetic dataset could not be generated with the requested layout."""


class PairwiseDistanceError(OTGateError):
    """A pairwise distance failed; carries the offending pair of ids."""

    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class DegenerateDistanceWarning(UserWarning):
    """Emitted when the similarity distance hits the 0/0 case."""
