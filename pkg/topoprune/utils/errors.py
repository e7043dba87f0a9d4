"""
Error types raised across the toolkit.

Every error derives from ``ValueError`` so callers that only care about bad
input can keep catching that. ``exit_code`` is the CLI exit status used when
the error escapes a subcommand.
"""


class TopopruneError(ValueError):
    """Base class for all toolkit errors."""
    exit_code = 2


class InvariantViolation(TopopruneError):
    """A graph or mask violates a structural invariant."""


class OddDegree(TopopruneError):
    """Ring lattices need an even degree."""


class DegreeTooLarge(TopopruneError):
    """Degree must be strictly smaller than the node count."""


class InfeasibleDegree(TopopruneError):
    """No simple k-regular graph exists for the given (n, k)."""


class RetryExhausted(TopopruneError):
    """The rejection sampler hit its retry cap."""


class Disconnected(TopopruneError):
    """The operation needs a connected graph."""


class DegenerateGraph(TopopruneError):
    """Too few edges to propose a swap."""


class ParseError(TopopruneError):
    """A file could not be parsed."""


class SchemaVersionMismatch(ParseError):
    """A JSON artifact has an unsupported schema version."""


class InfiniteGR(TopopruneError):
    """Walk sets never cover the graph (bipartite graph)."""


class UnsupportedDegree(TopopruneError):
    """The lower-bound formulas need k >= 3."""


class InvalidN(TopopruneError):
    """Node count incompatible with the requested degree."""


class TooFewUnits(TopopruneError):
    """A prunable layer is narrower than the node count."""


class MissingSpatialDims(TopopruneError):
    """A convolutional layer has no output H x W for FLOP accounting."""


class NonconformingSparsity(TopopruneError):
    """A weight matrix has nonzeros outside the allowed blocks."""


class ShapeMismatch(TopopruneError):
    """Array shapes do not conform."""


class NotOracleMode(TopopruneError):
    """Gradient-reach counting needs Identity activation and no biases."""


class OracleMismatch(TopopruneError):
    """An implementation disagreed with its reference oracle."""
