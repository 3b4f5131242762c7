"""
Brute-force ground truth for fixed points.

Nothing here relies on contraction: the 1-D scan looks for sign changes of
f(x) - x, the grid search looks for local minima of ||f(x) - x||_inf, and the
quadratic check works from the closed-form roots. Tangent (double) fixed points,
where f(x) - x touches zero without changing sign, are not detected by the scan.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from certify import ContractionCertificate, RegionBox, certify_contraction_scalar, grid_chunks
from config import DEFAULT_MAX_ITER, ORACLE_GRID_GUARD
from errors import DimensionMismatchError, DiscriminantError, DivergenceError, GridTooLargeError
from iterate import iterate_to_fixed_point
from model import ScalarMap

logger = logging.getLogger(__name__)

BISECT_MAX_ITER = 200
ORACLE_MAX_DIM = 3


@dataclass
class FixedPointRecord:
    """One located fixed point"""
    location: np.ndarray
    residual: float
    derivative_at: Optional[float] = None
    attracting: bool = False

    def to_dict(self) -> dict:
        return {
            'location': self.location,
            'residual': self.residual,
            'derivative_at': self.derivative_at,
            'attracting': self.attracting,
        }


def bisect_root(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                max_iter: int = BISECT_MAX_ITER) -> float:
    """
    Root of fn on [lo, hi] where fn(lo) and fn(hi) differ in sign.

    Halves the bracket until it is no wider than tol and |fn| at the best point
    is within tol, the bracket stops shrinking in floating point, or max_iter
    halvings are done. Returns whichever of lo, hi has the smaller |fn|.
    """
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = fn(mid)
        if fmid == 0.0:
            return float(mid)
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= tol and min(abs(flo), abs(fhi)) <= tol:
            break
    return float(lo if abs(flo) <= abs(fhi) else hi)


def _record_1d(f: ScalarMap, x: float) -> FixedPointRecord:
    residual = abs(float(f(x)) - x)
    slope = abs(float(f.slope(x)))
    return FixedPointRecord(np.array([x]), residual, slope, slope < 1.0)


def scan_fixed_points_1d(f: ScalarMap, interval: RegionBox, n: int = 10001,
                         tol: float = 1e-12) -> List[FixedPointRecord]:
    """Every sign change of f(x) - x on an n-point grid, refined by bisection, in increasing order"""
    if interval.d != 1:
        raise DimensionMismatchError(f"scan needs a 1-D interval, got d={interval.d}")
    if n < 3:
        raise ValueError(f"scan needs at least 3 grid points, got {n}")
    xs = interval.axis_points(0, n)
    r = np.asarray(f(xs), dtype=np.float64) - xs

    def residual(x: float) -> float:
        return float(f(x)) - x

    records = []
    for i in range(n):
        if r[i] == 0.0:
            records.append(_record_1d(f, float(xs[i])))
        elif i + 1 < n and r[i] * r[i + 1] < 0.0:
            root = bisect_root(residual, float(xs[i]), float(xs[i + 1]), tol)
            records.append(_record_1d(f, root))
    logger.info(f"scan on [{interval.lower[0]}, {interval.upper[0]}] (n={n}): "
                f"{len(records)} fixed points {[round(float(rec.location[0]), 6) for rec in records]}")
    return records


def _local_minima(values: np.ndarray) -> np.ndarray:
    """Mask of grid cells no larger than any axis neighbor"""
    mask = np.ones(values.shape, dtype=bool)
    padded = np.pad(values, 1, mode='constant', constant_values=np.inf)
    core = tuple(slice(1, -1) for _ in range(values.ndim))
    for axis in range(values.ndim):
        for shift in (-1, 1):
            neighbor = list(core)
            neighbor[axis] = slice(1 + shift, values.shape[axis] + 1 + shift)
            mask &= values <= padded[tuple(neighbor)]
    return mask


def grid_fixed_points(fmap: Callable[[np.ndarray], np.ndarray], box: RegionBox, n: int,
                      tol: float, max_iter: int = DEFAULT_MAX_ITER) -> List[FixedPointRecord]:
    """
    Local minima of ||f(x) - x||_inf on an n^d grid with value <= tol, refined by iteration.

    fmap must accept a (N, d) batch. Each hit is iterated to tolerance 1e-12;
    hits whose refinement lands within 2 grid cells of an earlier record are
    merged into it. A hit whose iteration does not settle is kept at its grid
    location and marked non-attracting; one that diverges or leaves the box is
    dropped.
    """
    d = box.d
    if d > ORACLE_MAX_DIM:
        raise DimensionMismatchError(f"grid search supports d <= {ORACLE_MAX_DIM}, got {d}")
    if n < 2:
        raise ValueError(f"need at least 2 grid points per axis, got {n}")
    if float(n) ** d > ORACLE_GRID_GUARD:
        raise GridTooLargeError(float(n) ** d, ORACLE_GRID_GUARD)

    values = np.empty(n ** d)
    points = np.empty((n ** d, d))
    for start, block in grid_chunks(box, n):
        image = np.asarray(fmap(block), dtype=np.float64).reshape(block.shape)
        values[start:start + len(block)] = np.max(np.abs(image - block), axis=1)
        points[start:start + len(block)] = block
    grid = values.reshape((n,) * d)
    hits = np.flatnonzero((_local_minima(grid) & (grid <= tol)).reshape(-1))

    cell = (box.upper - box.lower) / (n - 1)
    merge_radius = 2.0 * float(np.max(cell))
    records: List[FixedPointRecord] = []
    for flat in hits:
        start_point = points[flat]
        try:
            trace = iterate_to_fixed_point(fmap, start_point, tol=1e-12, max_iter=max_iter)
        except DivergenceError as e:
            logger.warning(f"grid hit {start_point.tolist()} diverged during refinement: {e}")
            continue
        if trace.converged:
            location = trace.final
            residual = float(np.max(np.abs(np.asarray(fmap(location)) - location)))
        else:
            location, residual = start_point.copy(), float(values[flat])
        if not box.contains(location, atol=merge_radius):
            continue
        if any(np.max(np.abs(rec.location - location)) <= merge_radius for rec in records):
            continue
        records.append(FixedPointRecord(location, residual, None, trace.converged))

    records.sort(key=lambda rec: tuple(rec.location))
    logger.info(f"grid search (d={d}, n={n}, tol={tol}): {len(hits)} hits, {len(records)} clusters")
    return records


# ====== Quadratic maps ======
@dataclass
class QuadraticReport:
    """Both fixed points of f(x) = ax^2 + bx + c and the derivative there"""
    a: float
    b: float
    c: float
    discriminant: float
    x1: float
    x2: float
    slope_x1: float
    slope_x2: float
    x2_attracting: bool
    holds: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def quadratic_fixed_point_property(a: float, b: float, c: float) -> QuadraticReport:
    """
    For f(x) = ax^2 + bx + c with two real fixed points, f'(x1) = 1 + sqrt(D) > 1
    and f'(x2) = 1 - sqrt(D) < 1 where D = (b - 1)^2 - 4ac.

    So a quadratic can never have two attracting fixed points. Whether x2 is
    attracting (|f'(x2)| < 1) is reported but not part of the property.
    """
    if a == 0:
        raise ValueError("a must be non-zero for a quadratic map")
    B = b - 1.0
    disc = B * B - 4.0 * a * c
    if not disc > 0:
        raise DiscriminantError(f"(b-1)^2 - 4ac = {disc} is not positive; no two real fixed points")
    root = math.sqrt(disc)
    # cancellation-free roots of a x^2 + (b-1) x + c = 0
    q = -0.5 * (B + math.copysign(root, B))
    roots = (q / a, c / q)
    slopes = tuple(2.0 * a * x + b for x in roots)
    hi = 0 if slopes[0] >= slopes[1] else 1
    x1, x2 = roots[hi], roots[1 - hi]
    s1, s2 = slopes[hi], slopes[1 - hi]
    scale = 1e-8 * (1.0 + abs(b) + root)
    holds = (s1 > 1.0 and s2 < 1.0
             and abs(s1 - (1.0 + root)) <= scale and abs(s2 - (1.0 - root)) <= scale)
    if not holds:
        logger.warning(f"quadratic property failed for a={a}, b={b}, c={c}: slopes {s1}, {s2}")
    return QuadraticReport(a, b, c, disc, x1, x2, s1, s2, abs(s2) < 1.0, holds)


# ====== Worked examples ======
@dataclass
class TextbookCase:
    name: str
    interval: RegionBox
    certificate: ContractionCertificate
    fixed_points: List[FixedPointRecord]
    expected: str
    ok: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'interval': self.interval,
            'certificate': self.certificate,
            'fixed_points': self.fixed_points,
            'expected': self.expected,
            'ok': self.ok,
            'details': self.details,
        }


@dataclass
class TextbookReport:
    cases: List[TextbookCase]

    @property
    def ok(self) -> bool:
        return all(case.ok for case in self.cases)

    def to_dict(self) -> dict:
        return {'ok': self.ok, 'cases': self.cases}


def shifted_square() -> ScalarMap:
    return ScalarMap(value=lambda x: (x * x - 1.0) / 3.0, derivative=lambda x: 2.0 * x / 3.0,
                     description="(x^2 - 1)/3")


def inverse_power_of_three() -> ScalarMap:
    return ScalarMap(value=lambda x: np.power(3.0, -x), derivative=lambda x: -math.log(3.0) * np.power(3.0, -x),
                     description="3^(-x)")


def textbook_examples_check(n: int = 10001) -> TextbookReport:
    """One success and two failure cases for the contraction-mapping hypotheses"""
    g = shifted_square()
    cases = []

    unit = RegionBox.interval(-1.0, 1.0)
    cert = certify_contraction_scalar(g, unit, n)
    found = scan_fixed_points_1d(g, unit, n)
    iterated = float(iterate_to_fixed_point(g, 0.0, tol=1e-14).final[0])
    analytic = (3.0 - math.sqrt(13.0)) / 2.0
    image = g(unit.axis_points(0, n))
    cases.append(TextbookCase(
        "contraction", unit, cert, found, "K_hat <= 2/3, image inside [-1/3, 0], unique fixed point",
        ok=(cert.k_hat <= 2.0 / 3.0 + 1e-15 and cert.closure_ok and len(found) == 1
            and abs(iterated - analytic) <= 1e-12
            and float(image.min()) >= -1.0 / 3.0 - 1e-15 and float(image.max()) <= 1e-15),
        details={'iterated_fixed_point': iterated, 'analytic_fixed_point': analytic,
                 'image': [float(image.min()), float(image.max())]}))

    upper = RegionBox.interval(3.0, 4.0)
    cert = certify_contraction_scalar(g, upper, n)
    found = scan_fixed_points_1d(g, upper, n)
    analytic = (3.0 + math.sqrt(13.0)) / 2.0
    cases.append(TextbookCase(
        "no-closure", upper, cert, found, "g(4) = 5 lies outside [3, 4]",
        ok=(not cert.closure_ok and float(g(4.0)) == 5.0 and len(found) == 1
            and abs(float(found[0].location[0]) - analytic) <= 1e-9),
        details={'g(4)': float(g(4.0)), 'analytic_fixed_point': analytic}))

    h = inverse_power_of_three()
    interval = RegionBox.interval(0.0, 1.0)
    cert = certify_contraction_scalar(h, interval, n)
    found = scan_fixed_points_1d(h, interval, n)
    cases.append(TextbookCase(
        "no-contraction", interval, cert, found, "K_hat = ln 3 > 1 at x = 0, still one fixed point",
        ok=(cert.k_hat > 1.0 and abs(cert.k_hat - math.log(3.0)) <= 1e-12 and len(found) == 1),
        details={'ln3': math.log(3.0)}))

    report = TextbookReport(cases)
    logger.info(f"textbook examples: {[(case.name, case.ok) for case in cases]}")
    return report
