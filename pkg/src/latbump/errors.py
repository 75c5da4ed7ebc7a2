"""Exception hierarchy.  CLI exit codes hang off these classes."""


class LatbumpError(Exception):
    exit_code = 1


class DimensionMismatch(LatbumpError, ValueError):
    exit_code = 2


class GridError(LatbumpError, ValueError):
    """Misaligned, incommensurate or too-coarse grids."""

    exit_code = 2


class ConfigError(LatbumpError, ValueError):
    exit_code = 2


class PreconditionError(LatbumpError):
    """A mathematical precondition failed (e.g. condition (A) obstruction)."""

    exit_code = 3


class NumericalError(LatbumpError):
    """c0 threshold, rank instability, unreachable tolerance."""

    exit_code = 4
