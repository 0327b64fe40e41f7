"""Exception taxonomy shared by all fieldlab modules.

Every error raised on purpose by this package derives from FieldLabError, so
callers (and the command line driver) can separate contract violations from
genuine bugs. The class name doubles as the machine-readable error category
printed by the CLI.
"""


class FieldLabError(Exception):
    """Base class for all errors deliberately raised by fieldlab."""


class ParameterError(FieldLabError, ValueError):
    """An argument or configuration value is out of its documented domain."""


class ShapeError(FieldLabError, ValueError):
    """Array dimensions are inconsistent with each other or with the grid."""


class MaskError(FieldLabError, ValueError):
    """A mask content violation (entries not in {0, 1}, wrong pairing)."""


class InsufficientDataError(FieldLabError, ValueError):
    """Too few observations for the requested operation."""


class NotPositiveDefiniteError(FieldLabError, RuntimeError):
    """Covariance matrix failed factorization even after maximum jitter."""


class SolverError(FieldLabError, RuntimeError):
    """A linear system could not be solved reliably."""


class UndefinedMetricError(FieldLabError, ValueError):
    """The requested metric is undefined on this input (e.g. zero variance)."""


class SizeLimitError(FieldLabError, ValueError):
    """The requested problem size exceeds a documented hard limit."""


class ConfigError(FieldLabError, ValueError):
    """A config file is malformed, has unknown keys, or misses required ones."""


class DivergenceError(FieldLabError, RuntimeError):
    """Training produced a non-finite loss; carries the iteration index."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class GraphError(FieldLabError, RuntimeError):
    """Misuse of the autodiff graph contract (non-scalar backward, reuse)."""


class ReplayError(FieldLabError, RuntimeError):
    """Replaying a run manifest produced different output bytes."""


class NonFiniteError(FieldLabError, FloatingPointError):
    """A forward operation produced NaN or Inf (hard error by contract)."""
