"""
Looped neural networks and their differentiable activations.

A looped network is one layer f(x) = g(Wx + b) applied to its own output L
times. Everything here is immutable and works on float64 numpy arrays; the
layer also accepts a batch of inputs stacked along the first axis.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from config import DIVERGENCE_GUARD
from errors import DimensionMismatchError, DivergenceError

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


def as_vector(x, d: Optional[int] = None) -> np.ndarray:
    """Coerce a scalar or sequence to a float64 vector, optionally checking its length"""
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimensionMismatchError(f"expected a vector of length {d}, got {v.shape[0]}")
    return v


def guard_iterate(x: np.ndarray, step: int) -> np.ndarray:
    """Raise DivergenceError when x is non-finite or beyond the magnitude guard"""
    if not np.all(np.isfinite(x)):
        raise DivergenceError(step, float('nan'))
    norm = float(np.max(np.abs(x))) if x.size else 0.0
    if norm > DIVERGENCE_GUARD:
        raise DivergenceError(step, norm)
    return x


@dataclass(frozen=True)
class Activation:
    """Scalar function with its exact derivative; both are applied entrywise"""
    value: ArrayFn
    derivative: ArrayFn
    description: str = ""

    def __call__(self, z):
        return self.value(np.asarray(z, dtype=np.float64))

    def slope(self, z):
        return self.derivative(np.asarray(z, dtype=np.float64))


# Reduced 1-D maps and textbook examples use the same shape of object.
ScalarMap = Activation


def derivative_check(activation: Activation, points: Iterable[float], step: float = 1e-5,
                     floor: float = 1e-3) -> float:
    """
    Largest relative error of the exact derivative against a central difference.

    Points where |g'(x)| < floor sit next to a critical point; there the
    absolute error is reported instead.
    """
    x = np.asarray(list(points), dtype=np.float64)
    exact = activation.slope(x)
    numeric = (activation(x + step) - activation(x - step)) / (2.0 * step)
    gap = np.abs(numeric - exact)
    near_critical = np.abs(exact) < floor
    errors = np.where(near_critical, gap, gap / np.where(near_critical, 1.0, np.abs(exact)))
    return float(np.max(errors))


@dataclass(frozen=True, eq=False)
class LoopedNetwork:
    """One looped layer f(x; W, b) = g(Wx + b)"""
    W: np.ndarray
    b: np.ndarray
    activation: Activation
    name: str = field(default="looped-network", compare=False)

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatchError(f"W must be square, got shape {W.shape}")
        if b.shape[0] != W.shape[0]:
            raise DimensionMismatchError(f"b has length {b.shape[0]}, W has side {W.shape[0]}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'W', W)
        object.__setattr__(self, 'b', b)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    def preactivation(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.d,):
            raise DimensionMismatchError(f"input has trailing size {x.shape[-1:]}, network has d={self.d}")
        return x @ self.W.T + self.b

    def forward(self, x) -> np.ndarray:
        return forward(self, x)

    __call__ = forward


def forward(net: LoopedNetwork, x) -> np.ndarray:
    """g applied entrywise to Wx + b; x may be one vector or a (N, d) batch"""
    return net.activation(net.preactivation(x))


def run_loops(net: LoopedNetwork, x0, L: int) -> np.ndarray:
    """L-fold composition of the layer applied to x0 (L = 0 returns x0)"""
    if L < 0:
        raise ValueError(f"number of loops must be non-negative, got {L}")
    x = as_vector(x0, net.d)
    for step in range(1, L + 1):
        x = guard_iterate(forward(net, x), step)
    return x


def jacobian(net: LoopedNetwork, x) -> np.ndarray:
    """Jacobian of the layer at x: diag(g'(Wx + b)) W"""
    x = as_vector(x, net.d)
    slopes = net.activation.slope(net.preactivation(x))
    return slopes[:, None] * net.W


def jacobian_row_l1(net: LoopedNetwork, x, j: int) -> float:
    """|g'(<w_j, x> + b_j)| * ||w_j||_1 for the 1-based row index j"""
    if not 1 <= j <= net.d:
        raise DimensionMismatchError(f"row index {j} outside 1..{net.d}")
    x = as_vector(x, net.d)
    row = net.W[j - 1]
    z = float(row @ x + net.b[j - 1])
    return float(abs(net.activation.slope(z)) * np.sum(np.abs(row)))


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Iterates x^(0..T) of one run plus the per-step residuals; arrays are read-only"""
    iterates: np.ndarray
    residuals: np.ndarray
    converged: bool
    noise_applied: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ('iterates', 'residuals', 'noise_applied'):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value, dtype=np.float64)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    @classmethod
    def from_iterates(cls, iterates, converged: bool, noise=None) -> "IterationTrace":
        """Build a trace whose residuals are computed from the stored iterates"""
        xs = np.array(iterates, dtype=np.float64)
        if xs.ndim == 1:
            xs = xs[:, None]
        residuals = np.max(np.abs(np.diff(xs, axis=0)), axis=1) if len(xs) > 1 else np.zeros(0)
        noise_arr = None if noise is None else np.asarray(noise, dtype=np.float64).reshape(len(xs) - 1, -1)
        return cls(iterates=xs, residuals=residuals, converged=converged, noise_applied=noise_arr)

    @property
    def T(self) -> int:
        return len(self.iterates) - 1

    @property
    def d(self) -> int:
        return self.iterates.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1].copy()

    def to_dict(self) -> dict:
        return {
            'T': self.T,
            'd': self.d,
            'converged': self.converged,
            'iterates': self.iterates,
            'residuals': self.residuals,
            'noise_applied': self.noise_applied,
        }
