"""Exception hierarchy shared by every fplnn module."""
from typing import Optional, Sequence


class FixedPointError(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DimensionMismatchError(FixedPointError, ValueError):
    """Vector or matrix shape does not match the object it is used with"""


class DivergenceError(FixedPointError):
    """An iterate became non-finite or exceeded the magnitude guard"""

    def __init__(self, step: int, norm: float):
        super().__init__(f"iteration diverged at step {step} (inf-norm {norm!r})")
        self.step = step
        self.norm = norm


class GridTooLargeError(FixedPointError):
    """Requested grid has more evaluation points than the guard allows"""

    def __init__(self, points: float, limit: float):
        super().__init__(f"grid of {points:.3g} points exceeds the limit of {limit:.3g}")
        self.points = points
        self.limit = limit


class CertificateError(FixedPointError):
    """Operation needs a contraction certificate (K_hat < 1) and did not get one"""


class HypothesisError(FixedPointError, ValueError):
    """Inputs violate a hypothesis the convergence guarantees rely on"""


class InsufficientDataError(FixedPointError):
    """Not enough iteration data to compute a statistic"""


class RefinementError(FixedPointError):
    """A fixed-point candidate could not be refined inside its box"""

    def __init__(self, candidate: Sequence[float], reason: str, index: Optional[int] = None):
        label = f"candidate #{index} " if index is not None else "candidate "
        super().__init__(f"{label}{list(map(float, candidate))} failed refinement: {reason}")
        self.candidate = list(map(float, candidate))
        self.index = index


class DiscriminantError(FixedPointError, ValueError):
    """Quadratic map without two distinct real fixed points"""
