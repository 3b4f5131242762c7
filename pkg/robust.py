"""
Perturbed fixed-point iteration x^(t) = f(x^(t-1)) + h(x^(t-1)) with ||h||_inf <= 1/m.

For a contraction with K <= 0.95 around p the perturbed iterates obey

    ||x^(t) - p|| <= K ||x^(t-1) - p|| + 1/m
    ||x^(t) - p|| <= K^t ||x^(0) - p|| + 20/m

and verify_robust checks both at every step of a recorded trace.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from config import BOUND_SLACK, DEFAULT_STEPS, ROBUST_CONSTANT, ROBUST_K_MAX
from errors import DimensionMismatchError, HypothesisError
from model import IterationTrace, as_vector, guard_iterate

logger = logging.getLogger(__name__)


def _check_hypothesis(K: float) -> None:
    if not 0.0 <= K <= ROBUST_K_MAX:
        raise HypothesisError(
            f"K={K} outside [0, {ROBUST_K_MAX}]: the robust bound K^t*e0 + 20/m "
            f"is only valid for contraction constants up to {ROBUST_K_MAX}")


@dataclass(frozen=True)
class NoiseModel:
    """
    Bounded perturbation with amplitude 1/m.

    By default h is uniform on [-1/m, 1/m] per coordinate, drawn from a
    generator keyed by (seed, step) so the stream does not depend on call
    order. A deterministic perturbation h(x) may be supplied instead; its
    infinity norm is checked against 1/m at every step.
    """
    m: float
    seed: int = 0
    perturbation: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.m > 0:
            raise HypothesisError(f"m must be positive, got {self.m}")

    @property
    def amplitude(self) -> float:
        return 1.0 / self.m

    def sample(self, step: int, x: np.ndarray) -> np.ndarray:
        """Noise vector applied at the given 1-based step from the iterate x"""
        d = x.shape[0]
        if self.perturbation is not None:
            h = np.atleast_1d(np.asarray(self.perturbation(x), dtype=np.float64))
            if h.shape != (d,):
                raise DimensionMismatchError(f"perturbation returned shape {h.shape}, expected ({d},)")
            if np.max(np.abs(h)) > self.amplitude:
                raise HypothesisError(f"perturbation at step {step} exceeds 1/m = {self.amplitude}")
            return h
        if self.amplitude == 0.0:
            return np.zeros(d)
        rng = np.random.default_rng([self.seed, step])
        return rng.uniform(-self.amplitude, self.amplitude, size=d)


def perturbed_iterate(fmap: Callable[[np.ndarray], np.ndarray], x0, noise: NoiseModel,
                      T: int = DEFAULT_STEPS) -> IterationTrace:
    """Exactly T steps of x^(t) = f(x^(t-1)) + h_t, recording every h_t"""
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    x = as_vector(x0)
    iterates = [x]
    applied = []
    for t in range(1, T + 1):
        fx = np.atleast_1d(np.asarray(fmap(x), dtype=np.float64))
        if fx.shape != x.shape:
            raise DimensionMismatchError(f"map returned shape {fx.shape} for input of shape {x.shape}")
        h = noise.sample(t, x)
        x = guard_iterate(fx + h if np.any(h) else fx, t)
        iterates.append(x)
        applied.append(h)
    # under persistent noise "converged" means the last step sits inside the noise floor
    last_step = float(np.max(np.abs(iterates[-1] - iterates[-2])))
    converged = last_step <= 2.0 * noise.amplitude + 1e-10
    trace = IterationTrace.from_iterates(iterates, converged=converged, noise=applied)
    logger.debug(f"perturbed run: m={noise.m} seed={noise.seed} T={T} final={trace.final.tolist()}")
    return trace


def robust_bound(K: float, m: float, t: int, e0: float) -> float:
    """K^t * e0 + 20/m"""
    _check_hypothesis(K)
    if not m > 0:
        raise HypothesisError(f"m must be positive, got {m}")
    if e0 < 0:
        raise ValueError(f"e0 must be non-negative, got {e0}")
    return K ** t * e0 + ROBUST_CONSTANT / m


def geometric_noise_sum(K: float, m: float, t: int) -> float:
    """sum_{i=1}^{t-1} K^i / m, the accumulated-noise term the 20/m constant dominates"""
    return float(sum(K ** i for i in range(1, t)) / m)


@dataclass
class RobustViolation:
    t: int
    bound: str
    err: float
    limit: float


@dataclass
class RobustReport:
    """Outcome of checking both robust bounds on one perturbed trace"""
    K: float
    m: float
    p: np.ndarray
    e0: float
    steps: int
    max_noise: float
    final_error: float
    violations: List[RobustViolation]
    slack: float = BOUND_SLACK

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def final_within_bound(self) -> bool:
        return self.final_error <= ROBUST_CONSTANT / self.m + self.slack

    def count(self, bound: str) -> int:
        return sum(1 for v in self.violations if v.bound == bound)

    def to_dict(self) -> dict:
        return {
            'K': self.K,
            'm': self.m,
            'p': self.p,
            'e0': self.e0,
            'steps': self.steps,
            'max_noise': self.max_noise,
            'final_error': self.final_error,
            'final_within_bound': self.final_within_bound,
            'ok': self.ok,
            'violations': self.violations,
        }


def verify_robust(trace: IterationTrace, p, K: float, m: float,
                  slack: float = BOUND_SLACK) -> RobustReport:
    """Check the one-step and cumulative robust bounds at every step"""
    _check_hypothesis(K)
    if not m > 0:
        raise HypothesisError(f"m must be positive, got {m}")
    p = as_vector(p, trace.d)
    errs = np.max(np.abs(trace.iterates - p), axis=1)
    e0 = float(errs[0])
    violations = []
    for t in range(1, trace.T + 1):
        onestep = K * errs[t - 1] + 1.0 / m
        if errs[t] > onestep + slack:
            violations.append(RobustViolation(t, 'onestep', float(errs[t]), float(onestep)))
        cumulative = K ** t * e0 + ROBUST_CONSTANT / m
        if errs[t] > cumulative + slack:
            violations.append(RobustViolation(t, 'cumulative', float(errs[t]), float(cumulative)))
    max_noise = 0.0
    if trace.noise_applied is not None and trace.noise_applied.size:
        max_noise = float(np.max(np.abs(trace.noise_applied)))
    report = RobustReport(K, m, p, e0, trace.T, max_noise, float(errs[-1]), violations, slack)
    if not report.ok:
        logger.warning(f"robust check m={m} K={K}: {len(violations)} violations, first at step {violations[0].t}")
    return report


def run_and_verify(fmap, x0, p, K: float, m: float, seed: int = 0,
                   T: int = DEFAULT_STEPS) -> tuple:
    """perturbed_iterate followed by verify_robust; returns (trace, report)"""
    trace = perturbed_iterate(fmap, x0, NoiseModel(m, seed), T)
    return trace, verify_robust(trace, p, K, m)
