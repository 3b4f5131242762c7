"""
Explicit looped networks with 2^d robust fixed points.

Two activation families are built so that shifting the input by a constant C
collapses the activation to a 1-D "reduced" map with two attracting fixed
points:

    polynomial:  g(x + C) = -(2/5) x^4 + (3/2) x^2,   4C^4 - 15C^2 + 10 = 0, C > 0
    exponential: g(x + C) = exp(x^3 - 2x^2) - 1,        C^3 + 2C^2 + ln 2 = 0

A near-diagonal weight matrix (1 on the diagonal, 1/m^2 elsewhere) with bias
C*1 then makes every coordinate follow the reduced map up to a small coupling
residue, giving one fixed point per choice of (p1, p2) in every coordinate.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from certify import RegionBox, certify_contraction_vector
from config import BOUND_SLACK, DEFAULT_GRID, ENUMERATION_MAX_DIM, ROBUST_CONSTANT, Family
from errors import HypothesisError, RefinementError
from iterate import reference_fixed_point
from model import Activation, LoopedNetwork, ScalarMap
from oracle import bisect_root
from robust import NoiseModel, perturbed_iterate

logger = logging.getLogger(__name__)

CONSTANT_TOL = 1e-14


# ====== Constants ======
def _poly_constant_equation(c: float) -> float:
    return 4.0 * c ** 4 - 15.0 * c ** 2 + 10.0


def _exp_constant_equation(c: float) -> float:
    return c ** 3 + 2.0 * c ** 2 + math.log(2.0)


@lru_cache(maxsize=None)
def poly_constant() -> float:
    """Positive root of 4C^4 - 15C^2 + 10 near 1.698 (equals sqrt((15 + sqrt 65) / 8))"""
    return bisect_root(_poly_constant_equation, 1.5, 2.5, tol=CONSTANT_TOL)


@lru_cache(maxsize=None)
def exp_constant() -> float:
    """Root of C^3 + 2C^2 + ln 2 near -2.15"""
    return bisect_root(_exp_constant_equation, -2.5, -2.0, tol=CONSTANT_TOL)


def constant_for(family) -> float:
    family = Family.parse(family)
    return poly_constant() if family is Family.POLYNOMIAL else exp_constant()


def constant_residual(family) -> float:
    """Defining equation evaluated at the solved constant"""
    family = Family.parse(family)
    if family is Family.POLYNOMIAL:
        return abs(_poly_constant_equation(poly_constant()))
    return abs(_exp_constant_equation(exp_constant()))


# ====== Activations ======
def poly_activation(C: Optional[float] = None) -> Activation:
    """g(z) = -(2/5)z^4 + (8/5)Cz^3 + (3/2 - (12/5)C^2)z^2 + ((8/5)C^3 - 3C)z + 1"""
    C = poly_constant() if C is None else C
    g = Polynomial([1.0, 1.6 * C ** 3 - 3.0 * C, 1.5 - 2.4 * C ** 2, 1.6 * C, -0.4])
    dg = g.deriv()
    return Activation(value=g, derivative=dg, description=f"polynomial activation (C={C:.15g})")


def exp_activation(C: Optional[float] = None) -> Activation:
    """g(z) = exp(z^3 + (-2 - 3C)z^2 + (3C^2 + 4C)z + ln 2) - 1"""
    C = exp_constant() if C is None else C
    exponent = Polynomial([math.log(2.0), 3.0 * C ** 2 + 4.0 * C, -2.0 - 3.0 * C, 1.0])
    slope = exponent.deriv()

    def value(z):
        return np.expm1(exponent(z))

    def derivative(z):
        return slope(z) * np.exp(exponent(z))

    return Activation(value=value, derivative=derivative, description=f"exponential activation (C={C:.15g})")


def activation_for(family) -> Activation:
    family = Family.parse(family)
    return poly_activation() if family is Family.POLYNOMIAL else exp_activation()


# ====== Reduced maps ======
@dataclass(frozen=True)
class CertifiedRegion:
    """Interval around one reduced-map fixed point with its published K"""
    lower: float
    upper: float
    approx_fixed_point: float
    stated_K: float
    label: str

    @property
    def box(self) -> RegionBox:
        return RegionBox.interval(self.lower, self.upper)


@dataclass(frozen=True)
class ReducedMap:
    """1-D map every coordinate of the case-study networks follows"""
    family: Family
    fn: ScalarMap
    regions: Tuple[CertifiedRegion, CertifiedRegion]

    def __call__(self, x):
        return self.fn(x)


def _poly_reduced() -> ScalarMap:
    f = Polynomial([0.0, 0.0, 1.5, 0.0, -0.4])
    return ScalarMap(value=f, derivative=f.deriv(), description="-(2/5)x^4 + (3/2)x^2")


def _exp_reduced() -> ScalarMap:
    exponent = Polynomial([0.0, 0.0, -2.0, 1.0])
    slope = exponent.deriv()
    return ScalarMap(value=lambda x: np.expm1(exponent(x)),
                     derivative=lambda x: slope(x) * np.exp(exponent(x)),
                     description="exp(x^3 - 2x^2) - 1")


REGIONS = {
    Family.POLYNOMIAL: (CertifiedRegion(-0.3, 0.3, 0.0, 0.9, "D1"),
                        CertifiedRegion(1.3028, 1.5028, 1.4028, 0.92, "D2")),
    Family.EXPONENTIAL: (CertifiedRegion(-0.1, 0.1, 0.0, 0.5, "D1"),
                         CertifiedRegion(-1.010, -0.810, -0.9104, 0.85, "D2")),
}


def reduced_map(family) -> ReducedMap:
    family = Family.parse(family)
    fn = _poly_reduced() if family is Family.POLYNOMIAL else _exp_reduced()
    return ReducedMap(family, fn, REGIONS[family])


# ====== Networks ======
def build_coupled_network(family, d: int, m: float) -> LoopedNetwork:
    """W = (1/m^2) 11^T + (1 - 1/m^2) I, b = C*1"""
    family = Family.parse(family)
    if d < 1:
        raise HypothesisError(f"dimension must be at least 1, got {d}")
    if not m > d:
        raise HypothesisError(f"coupling parameter m={m} must exceed the dimension d={d}")
    W = np.full((d, d), 1.0 / (m * m))
    np.fill_diagonal(W, 1.0)
    b = np.full(d, constant_for(family))
    return LoopedNetwork(W, b, activation_for(family), name=f"coupled-{family.value}-d{d}-m{m:g}")


def build_diagonal_network(family, d: int) -> LoopedNetwork:
    """W = I, b = C*1: fully decoupled coordinates"""
    family = Family.parse(family)
    if d < 1:
        raise HypothesisError(f"dimension must be at least 1, got {d}")
    return LoopedNetwork(np.eye(d), np.full(d, constant_for(family)), activation_for(family),
                         name=f"diagonal-{family.value}-d{d}")


def build_dummy_network(family) -> LoopedNetwork:
    """
    3-D network carrying the reduced map in coordinate 1.

    Row 1 is u = [1, 1, C - 1] so <u, (x, 1, 1)> = x + C; rows 2 and 3 are zero
    and output g(0) = 1, which keeps the dummy coordinates pinned at 1.
    """
    family = Family.parse(family)
    C = constant_for(family)
    W = np.zeros((3, 3))
    W[0] = [1.0, 1.0, C - 1.0]
    return LoopedNetwork(W, np.zeros(3), activation_for(family), name=f"dummy-{family.value}")


def build_ddim_exp_network(d: int) -> LoopedNetwork:
    """d-dimensional dummy construction, u = [1, 1/(d-1), ..., 1/(d-1), 1/(d-1) + C - 1]"""
    if d < 2:
        raise HypothesisError(f"dummy construction needs d >= 2, got {d}")
    C = exp_constant()
    u = np.full(d, 1.0 / (d - 1))
    u[0] = 1.0
    u[-1] = 1.0 / (d - 1) + C - 1.0
    W = np.zeros((d, d))
    W[0] = u
    return LoopedNetwork(W, np.zeros(d), exp_activation(C), name=f"dummy-exp-d{d}")


# ====== Case-study specs and enumeration ======
@dataclass(frozen=True)
class CaseStudySpec:
    """Parameters of one coupled case-study network"""
    family: Family
    C: float
    d: int
    m: float
    per_coordinate_fixed_points: Tuple[float, float]
    regions: Tuple[CertifiedRegion, CertifiedRegion]

    def network(self) -> LoopedNetwork:
        return build_coupled_network(self.family, self.d, self.m)

    def candidate_bits(self, index: int) -> List[int]:
        """Which per-coordinate fixed point each coordinate uses (coordinate 1 = lowest bit)"""
        return [(index >> j) & 1 for j in range(self.d)]

    def candidate_box(self, index: int) -> RegionBox:
        return RegionBox.product([self.regions[bit].box for bit in self.candidate_bits(index)])

    def to_dict(self) -> dict:
        return {
            'family': self.family,
            'C': self.C,
            'd': self.d,
            'm': self.m,
            'per_coordinate_fixed_points': list(self.per_coordinate_fixed_points),
            'regions': [{'label': r.label, 'lower': r.lower, 'upper': r.upper, 'K': r.stated_K}
                        for r in self.regions],
        }


def case_study_spec(family, d: int, m: float) -> CaseStudySpec:
    """Spec with both reduced-map fixed points solved to tight tolerance"""
    family = Family.parse(family)
    if not m > d:
        raise HypothesisError(f"coupling parameter m={m} must exceed the dimension d={d}")
    reduced = reduced_map(family)
    points = tuple(float(reference_fixed_point(reduced.fn, r.approx_fixed_point)[0]) for r in reduced.regions)
    return CaseStudySpec(family, constant_for(family), d, float(m), points, reduced.regions)


def _refine(net: LoopedNetwork, x: np.ndarray, box: RegionBox, index: int,
            damping: float, max_iter: int, tol: float) -> np.ndarray:
    start = x.copy()
    for _ in range(max_iter):
        fx = net(x)
        if np.max(np.abs(fx - x)) <= tol:
            return x
        x = (1.0 - damping) * x + damping * fx
        if not np.all(np.isfinite(x)) or not box.contains(x):
            raise RefinementError(start, "left its certified box", index)
    return x


def enumerate_fixed_points(spec: CaseStudySpec, damping: float = 0.5, max_iter: int = 500,
                           tol: float = 1e-13) -> List[np.ndarray]:
    """
    All 2^d per-coordinate combinations of (p1, p2), each refined on the coupled network.

    Results come in binary-counter order with coordinate 1 fastest. A candidate
    is accepted when ||f(p) - p||_inf <= 1/m + 1e-8.
    """
    if spec.d > ENUMERATION_MAX_DIM:
        raise HypothesisError(f"d={spec.d} gives 2^d candidates; the limit is d <= {ENUMERATION_MAX_DIM}")
    net = spec.network()
    acceptance = 1.0 / spec.m + 1e-8
    points = np.asarray(spec.per_coordinate_fixed_points)
    found = []
    for index in range(2 ** spec.d):
        x = points[spec.candidate_bits(index)].astype(np.float64)
        refined = _refine(net, x, spec.candidate_box(index), index, damping, max_iter, tol)
        residual = float(np.max(np.abs(net(refined) - refined)))
        if residual > acceptance:
            raise RefinementError(x, f"residual {residual:.3e} above {acceptance:.3e}", index)
        found.append(refined)
    logger.info(f"enumerated {len(found)} fixed points ({spec.family.value}, d={spec.d}, m={spec.m:g})")
    return found


# ====== Case-study guarantee check ======
@dataclass
class CandidateCheck:
    """Perturbed run started inside one candidate's box"""
    index: int
    fixed_point: np.ndarray
    K: float
    epsilon_stated: float
    epsilon_diameter: float
    stated_violations: int
    proven_violations: int
    final_error: float


@dataclass
class CaseStudyReport:
    spec: CaseStudySpec
    seed: int
    steps: int
    candidates: List[CandidateCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.stated_violations == 0 and c.proven_violations == 0 for c in self.candidates)

    def to_dict(self) -> dict:
        return {'spec': self.spec.to_dict(), 'seed': self.seed, 'steps': self.steps,
                'ok': self.ok, 'candidates': self.candidates}


def verify_case_study(spec: CaseStudySpec, seed: int = 0, steps: int = 200) -> CaseStudyReport:
    """
    Check the per-candidate guarantee err_t <= K^t * eps + 20/m under noise of size 1/m.

    Two forms are counted: eps = farthest box point from p (as the guarantee is
    usually quoted) and c * eps with the box diameter and c = 1/(1 - K) (as it
    follows from the a priori bound).
    """
    if spec.d not in DEFAULT_GRID:
        raise HypothesisError(f"grid certificates are limited to d <= {max(DEFAULT_GRID)}, got {spec.d}")
    net = spec.network()
    rng = np.random.default_rng(seed)
    report = CaseStudyReport(spec, seed, steps)
    for index, p in enumerate(enumerate_fixed_points(spec)):
        box = spec.candidate_box(index)
        cert = certify_contraction_vector(net, box, DEFAULT_GRID[spec.d])
        K = cert.k_hat
        eps_stated = float(np.max(np.maximum(np.abs(box.upper - p), np.abs(box.lower - p))))
        eps_proven = box.diameter / (1.0 - K)
        x0 = box.sample(rng, 1)[0]
        trace = perturbed_iterate(net, x0, NoiseModel(spec.m, seed + index), steps)
        errs = np.max(np.abs(trace.iterates - p), axis=1)
        t = np.arange(len(errs))
        noise_term = ROBUST_CONSTANT / spec.m + BOUND_SLACK
        stated = int(np.sum(errs[1:] > K ** t[1:] * eps_stated + noise_term))
        proven = int(np.sum(errs[1:] > K ** t[1:] * eps_proven + noise_term))
        report.candidates.append(CandidateCheck(index, p, K, eps_stated, box.diameter,
                                                stated, proven, float(errs[-1])))
    if not report.ok:
        logger.warning(f"case-study guarantee violated for {spec.family.value} d={spec.d}")
    return report
