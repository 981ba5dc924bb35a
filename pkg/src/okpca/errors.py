"""Exception hierarchy shared across the package."""


class OkpcaError(Exception):
    """Base class for all package errors."""


class DimensionError(OkpcaError, ValueError):
    """State vectors or trajectories disagree on dimension."""


class RankError(OkpcaError, ValueError):
    """More components were requested than the centered Gram matrix supports."""

    def __init__(self, requested: int, rank: int):
        self.requested = requested
        self.rank = rank
        super().__init__(
            f"requested {requested} components but the centered Gram matrix "
            f"has numerical rank {rank}"
        )


class NumericalError(OkpcaError, ArithmeticError):
    """Non-finite values appeared in a computation."""


class SimulationDiverged(NumericalError):
    """An integrated state became non-finite."""

    def __init__(self, time: float, name: str = ""):
        self.time = time
        label = f" ({name})" if name else ""
        super().__init__(f"simulation diverged at t={time:g}{label}")


class DatasetError(OkpcaError, ValueError):
    """A trajectory file or manifest could not be parsed."""


class ConfigError(OkpcaError, ValueError):
    """A configuration file or preset failed validation."""
