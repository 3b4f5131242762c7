"""
Sampling-based contraction certificates over axis-aligned boxes.

A certificate records the largest sampled value of the contraction quantity
(|f'| for scalar maps, the Jacobian row L1 norm for looped networks, n*d times
the largest entrywise partial for matrix maps) together with a closure verdict:
whether every sampled image stayed inside the box. Grids include the box
endpoints; ties for the worst point go to the lexicographically smallest grid
index.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np

from config import GRID_GUARD
from errors import CertificateError, DimensionMismatchError, GridTooLargeError
from model import LoopedNetwork, ScalarMap, as_vector

logger = logging.getLogger(__name__)

CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class RegionBox:
    """Closed box prod_i [lower_i, upper_i]"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower)
        upper = as_vector(self.upper)
        if lower.shape != upper.shape:
            raise DimensionMismatchError(f"bounds have lengths {lower.shape[0]} and {upper.shape[0]}")
        if np.any(lower > upper):
            raise ValueError(f"empty box: lower {lower.tolist()} exceeds upper {upper.tolist()}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def interval(cls, lower: float, upper: float) -> "RegionBox":
        return cls([lower], [upper])

    @classmethod
    def cube(cls, lower: float, upper: float, d: int) -> "RegionBox":
        return cls(np.full(d, lower), np.full(d, upper))

    @classmethod
    def product(cls, boxes: Sequence["RegionBox"]) -> "RegionBox":
        return cls(np.concatenate([b.lower for b in boxes]), np.concatenate([b.upper for b in boxes]))

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        """sup of ||y - z||_inf over the box"""
        return float(np.max(self.upper - self.lower)) if self.d else 0.0

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def axis_points(self, axis: int, n: int) -> np.ndarray:
        """
        n equally spaced points on one axis, endpoints included.

        Points are lower + (upper - lower) * (i / (n - 1)); with that form a grid
        of n' points contains the n-point grid exactly whenever n - 1 divides n' - 1.
        """
        lo, hi = self.lower[axis], self.upper[axis]
        if n == 1:
            return np.array([lo])
        pts = lo + (hi - lo) * (np.arange(n) / (n - 1))
        pts[-1] = hi
        return pts

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.d))

    def to_dict(self) -> dict:
        return {'lower': self.lower, 'upper': self.upper}


@dataclass(frozen=True, eq=False)
class ContractionCertificate:
    """Empirical contraction and closure verdict for one box"""
    region: RegionBox
    k_hat: float
    closure_ok: bool
    grid_points_per_axis: int
    worst_point: np.ndarray
    kind: str = "vector"
    approximate: bool = False

    @property
    def contractive(self) -> bool:
        """True when the certificate supports a convergence guarantee"""
        return self.k_hat < 1.0 and self.closure_ok

    @property
    def epsilon(self) -> float:
        return self.region.diameter

    @property
    def c(self) -> Optional[float]:
        return 1.0 / (1.0 - self.k_hat) if self.k_hat < 1.0 else None

    def to_dict(self) -> dict:
        return {
            'region': self.region.to_dict(),
            'K_hat': self.k_hat,
            'closure_ok': self.closure_ok,
            'grid_points_per_axis': self.grid_points_per_axis,
            'worst_point': self.worst_point,
            'kind': self.kind,
            'approximate': self.approximate,
            'contractive': self.contractive,
            'epsilon': self.epsilon,
            'c': self.c,
        }


def _check_grid(n: int, d: int, limit: float = GRID_GUARD) -> None:
    if n < 2:
        raise ValueError(f"need at least 2 grid points per axis, got {n}")
    points = float(n) ** d
    if points > limit:
        raise GridTooLargeError(points, limit)


def grid_chunks(region: RegionBox, n: int, chunk: int = CHUNK) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (first flat index, points) blocks of the n^d grid in C order"""
    axes = [region.axis_points(i, n) for i in range(region.d)]
    total = n ** region.d
    shape = (n,) * region.d
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, shape)
        yield start, np.stack([axes[i][idx[i]] for i in range(region.d)], axis=1)


def _sweep(region: RegionBox, n: int, evaluate) -> Tuple[float, bool, np.ndarray]:
    """
    Run evaluate(points) -> (quantity, inside) over the grid.

    Returns the max quantity, whether every image was inside, and the first
    grid point attaining the max. NaN quantities count as +inf.
    """
    best = -np.inf
    worst = region.lower.copy()
    closure_ok = True
    for _, points in grid_chunks(region, n):
        quantity, inside = evaluate(points)
        quantity = np.where(np.isnan(quantity), np.inf, quantity)
        k = int(np.argmax(quantity))
        if quantity[k] > best:
            best = float(quantity[k])
            worst = points[k].copy()
        closure_ok = closure_ok and bool(np.all(inside))
    return best, closure_ok, worst


def certify_contraction_scalar(f: ScalarMap, interval: RegionBox, n: int = 10001) -> ContractionCertificate:
    """K_hat = max |f'| over n equally spaced points; closure iff every f(x) lies in the interval"""
    if interval.d != 1:
        raise DimensionMismatchError(f"scalar certificate needs a 1-D interval, got d={interval.d}")
    _check_grid(n, 1)
    lo, hi = interval.lower[0], interval.upper[0]

    def evaluate(points):
        x = points[:, 0]
        fx = f(x)
        return np.abs(f.slope(x)), (fx >= lo) & (fx <= hi)

    k_hat, closure_ok, worst = _sweep(interval, n, evaluate)
    cert = ContractionCertificate(interval, k_hat, closure_ok, n, worst, kind="scalar")
    logger.info(f"scalar certificate on [{lo}, {hi}]: K_hat={k_hat:.6f} closure={closure_ok}")
    return cert


def certify_contraction_vector(net: LoopedNetwork, region: RegionBox, n: int) -> ContractionCertificate:
    """K_hat = max over grid points and rows of |g'(<w_j,x>+b_j)| * ||w_j||_1"""
    if region.d != net.d:
        raise DimensionMismatchError(f"region has d={region.d}, network has d={net.d}")
    _check_grid(n, net.d)
    row_l1 = np.sum(np.abs(net.W), axis=1)

    def evaluate(points):
        z = net.preactivation(points)
        quantity = np.max(np.abs(net.activation.slope(z)) * row_l1, axis=1)
        fx = net.activation(z)
        inside = np.all((fx >= region.lower) & (fx <= region.upper), axis=1)
        return quantity, inside

    k_hat, closure_ok, worst = _sweep(region, n, evaluate)
    cert = ContractionCertificate(region, k_hat, closure_ok, n, worst, kind="vector")
    logger.info(f"vector certificate (d={net.d}, n={n}): K_hat={k_hat:.6f} closure={closure_ok}")
    return cert


def finite_difference_partials(fmap: Callable[[np.ndarray], np.ndarray], X: np.ndarray,
                               step: float = 1e-6) -> np.ndarray:
    """Central-difference array J[i, j, k, l] ~ d f(X)_{ij} / d X_{kl}"""
    rows, cols = X.shape
    J = np.empty((rows, cols, rows, cols))
    for k, l in itertools.product(range(rows), range(cols)):
        E = np.zeros_like(X)
        E[k, l] = step
        J[:, :, k, l] = (np.asarray(fmap(X + E)) - np.asarray(fmap(X - E))) / (2.0 * step)
    return J


def certify_contraction_matrix(fmap: Callable[[np.ndarray], np.ndarray], region: RegionBox,
                               grid: int, shape: Tuple[int, int],
                               partials: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                               fd_step: float = 1e-6) -> ContractionCertificate:
    """
    Entrywise certificate for a map on n x d matrices.

    region is a box over the n*d entries in row-major order. K_hat is n*d times
    the largest sampled |d f(X)_{ij} / d X_{kl}|. Without analytic partials
    central differences are used and the certificate is flagged approximate.
    """
    rows, cols = shape
    size = rows * cols
    if region.d != size:
        raise DimensionMismatchError(f"region has {region.d} entries, shape {shape} has {size}")
    _check_grid(grid, size)
    approximate = partials is None
    best = -np.inf
    worst = region.lower.copy()
    closure_ok = True
    for _, points in grid_chunks(region, grid):
        for point in points:
            X = point.reshape(shape)
            J = partials(X) if partials is not None else finite_difference_partials(fmap, X, fd_step)
            value = float(np.max(np.abs(J)))
            if np.isnan(value):
                value = np.inf
            if value > best:
                best = value
                worst = point.copy()
            image = np.asarray(fmap(X), dtype=np.float64).reshape(-1)
            closure_ok = closure_ok and region.contains(image)
    k_hat = size * best
    logger.info(f"matrix certificate (shape={shape}, grid={grid}): K_hat={k_hat:.6f} "
                f"closure={closure_ok} approximate={approximate}")
    return ContractionCertificate(region, k_hat, closure_ok, grid, worst, kind="matrix",
                                  approximate=approximate)


def certified_error_coefficients(cert: ContractionCertificate) -> Tuple[float, float]:
    """(epsilon, c): the box's inf-diameter and 1 / (1 - K_hat)"""
    if cert.k_hat >= 1.0:
        raise CertificateError(f"K_hat={cert.k_hat} is not a contraction constant")
    return cert.epsilon, 1.0 / (1.0 - cert.k_hat)


def region_error_bound(cert: ContractionCertificate, L: int) -> float:
    """K_hat^L * c * epsilon: guaranteed ||x^(L) - p||_inf for any start in the box"""
    epsilon, c = certified_error_coefficients(cert)
    return cert.k_hat ** L * c * epsilon
