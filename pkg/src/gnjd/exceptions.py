"""Exception hierarchy shared by all gnjd modules."""


class GNJDError(Exception):
    """Base class for all errors raised by gnjd."""


class DimensionError(GNJDError, ValueError):
    """Shapes of the inputs do not agree."""


class RotationIndexError(GNJDError, IndexError):
    """An elementary rotation was requested with i == j or an out-of-range index."""


class ConfigurationError(GNJDError, ValueError):
    """Solver or experiment parameters are invalid."""


class SingularityError(GNJDError, ArithmeticError):
    """An unmixing estimate degenerated (zero row)."""


class NumericalError(GNJDError, ArithmeticError):
    """A non-finite value appeared during the solve."""


class DegenerateInputError(GNJDError, ValueError):
    """A metric cannot be evaluated on the given input (e.g. zero gain row)."""


class FormatError(GNJDError, ValueError):
    """A binary file is malformed (wrong magic, truncated payload, ...)."""
