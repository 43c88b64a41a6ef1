"""Exception hierarchy shared by all zgs modules.

Two branches: :class:`DataError` for bad or missing inputs, and
:class:`ComputationError` for degenerate or numerically unstable
computations. The CLI maps the branches to distinct exit codes.
"""


class ZgsError(Exception):
    """Base class for every error raised by this package."""


class DataError(ZgsError):
    """Invalid, missing, or inconsistent input data (CLI exit code 2)."""


class MissingInput(DataError):
    """A required file or directory does not exist."""


class ParseError(DataError):
    """A file could not be parsed; the message names file and line."""


class IntegrityError(DataError):
    """Cross-references or invariants are violated; names the offender."""


class NotFound(DataError):
    """A referenced entity does not exist."""


class InsufficientData(DataError):
    """Too few records to perform the requested computation."""


class MissingEmbedding(DataError):
    """A node referenced by feature assembly has no embedding."""


class EmptyInput(DataError):
    """An operation received an empty collection."""


class InvalidK(DataError):
    """A top-k request exceeds the number of available candidates."""


class ComputationError(ZgsError):
    """Degenerate or numerically unstable computation (CLI exit code 3)."""


class DegenerateVector(ComputationError):
    """A vector is constant where variation is required."""


class DegenerateLabels(ComputationError):
    """Labels are constant or a class is absent."""


class NumericalError(ComputationError):
    """Non-finite values entered a numerical routine."""


class DegenerateTraining(ComputationError):
    """A training set lacks positive or negative examples."""


class ShapeError(ComputationError):
    """Array dimensions do not match the expected shapes."""


class DeadEnd(ComputationError):
    """A random walk reached a node with no usable out-edges."""


class EmptyGraph(ComputationError):
    """The graph has no edges usable for the requested operation."""


class EmptyNeighborhood(ComputationError):
    """Attention was requested for a node with no neighbors."""
