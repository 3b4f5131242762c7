"""
Noiseless fixed-point iteration and the Banach error-bound ledger.

Given a contraction constant K on a closed invariant set with fixed point p,
every step of x^(t) = f(x^(t-1)) satisfies

    ||x^(t) - p|| <= K^t / (1 - K) * ||x^(1) - x^(0)||      (a priori)
    ||x^(t) - p|| <= K / (1 - K) * ||x^(t) - x^(t-1)||      (a posteriori)
    ||x^(t) - p|| <= K * ||x^(t-1) - p||                     (one step)

in the infinity norm. The ledger evaluates all three at every step and flags
any that fail by more than a small rounding slack.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from certify import ContractionCertificate
from config import BOUND_SLACK, DEFAULT_MAX_ITER, DEFAULT_TOL, TIGHT_TOL
from errors import CertificateError, DimensionMismatchError, InsufficientDataError
from model import IterationTrace, as_vector, guard_iterate

logger = logging.getLogger(__name__)

VectorMap = Callable[[np.ndarray], np.ndarray]
BOUND_NAMES = ('apriori', 'aposteriori', 'onestep')


def _step(fmap: VectorMap, x: np.ndarray, step: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(fmap(x), dtype=np.float64))
    if y.shape != x.shape:
        raise DimensionMismatchError(f"map returned shape {y.shape} for input of shape {x.shape}")
    return guard_iterate(y, step)


def iterate_to_fixed_point(fmap: VectorMap, x0, tol: float = DEFAULT_TOL,
                           max_iter: int = DEFAULT_MAX_ITER) -> IterationTrace:
    """Iterate until ||x^(t) - x^(t-1)||_inf <= tol or max_iter steps"""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    x = as_vector(x0)
    iterates = [x]
    converged = False
    for t in range(1, max_iter + 1):
        y = _step(fmap, x, t)
        iterates.append(y)
        if np.max(np.abs(y - x)) <= tol:
            converged = True
            break
        x = y
    trace = IterationTrace.from_iterates(iterates, converged)
    if converged:
        logger.debug(f"converged in {trace.T} steps to {trace.final.tolist()}")
    else:
        logger.warning(f"no convergence after {max_iter} steps (last residual {trace.residuals[-1]:.3e})")
    return trace


def reference_fixed_point(fmap: VectorMap, x0, tol: float = TIGHT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Fixed point from a tight-tolerance run, used when no oracle value is at hand"""
    return iterate_to_fixed_point(fmap, x0, tol=tol, max_iter=max_iter).final


@dataclass
class LedgerRecord:
    """Bounds at one step t >= 1"""
    t: int
    err: float
    apriori: float
    aposteriori: float
    onestep: float
    region_bound: Optional[float] = None
    stated_bound: Optional[float] = None
    violations: Tuple[str, ...] = ()


@dataclass
class BoundLedger:
    """Per-step Banach bounds for one trace against a reference fixed point"""
    records: List[LedgerRecord]
    K: float
    p: np.ndarray
    p_source: str = "supplied"
    slack: float = BOUND_SLACK
    certificate: Optional[ContractionCertificate] = field(default=None, repr=False)

    @property
    def violations(self) -> List[Tuple[int, str]]:
        return [(r.t, name) for r in self.records for name in r.violations]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            'K': self.K,
            'p': self.p,
            'p_source': self.p_source,
            'slack': self.slack,
            'ok': self.ok,
            'violations': [{'t': t, 'bound': name} for t, name in self.violations],
            'records': self.records,
        }


def banach_ledger(trace: IterationTrace, K: float, p, p_source: str = "supplied",
                  certificate: Optional[ContractionCertificate] = None,
                  slack: float = BOUND_SLACK) -> BoundLedger:
    """
    Evaluate the three bounds at every step of the trace.

    With a certificate the record also carries K^t * c * epsilon (checked) and
    the same bound without c (recorded only).
    """
    if K >= 1.0:
        raise CertificateError(f"K={K} is not a contraction constant")
    if K < 0.0:
        raise ValueError(f"K must be non-negative, got {K}")
    if trace.T < 1:
        raise InsufficientDataError("trace has no steps")
    p = as_vector(p, trace.d)
    xs = trace.iterates
    errs = np.max(np.abs(xs - p), axis=1)
    first_step = trace.residuals[0]
    coefficients = None
    if certificate is not None and certificate.k_hat < 1.0:
        coefficients = (certificate.k_hat, certificate.epsilon, 1.0 / (1.0 - certificate.k_hat))

    records = []
    for t in range(1, trace.T + 1):
        err = float(errs[t])
        bounds = {
            'apriori': K ** t / (1.0 - K) * first_step,
            'aposteriori': K / (1.0 - K) * trace.residuals[t - 1],
            'onestep': K * errs[t - 1],
        }
        failed = [name for name in BOUND_NAMES if err > bounds[name] + slack]
        region_bound = stated_bound = None
        if coefficients is not None:
            k_cert, epsilon, c = coefficients
            region_bound = k_cert ** t * c * epsilon
            stated_bound = k_cert ** t * epsilon
            if err > region_bound + slack:
                failed.append('region')
        records.append(LedgerRecord(t, err, float(bounds['apriori']), float(bounds['aposteriori']),
                                    float(bounds['onestep']), region_bound, stated_bound, tuple(failed)))

    ledger = BoundLedger(records, K, p, p_source, slack, certificate)
    if ledger.ok:
        logger.info(f"ledger: {len(records)} steps, all bounds hold (K={K})")
    else:
        logger.warning(f"ledger: {len(ledger.violations)} bound violations (K={K})")
    return ledger


def geometric_rate_estimate(trace: IterationTrace, floor: float = 1e-13) -> float:
    """
    Median of residual ratios r_t / r_(t-1) over the second half of a converged trace.

    Ratios whose denominator is below `floor` are dropped since they measure
    rounding rather than contraction.
    """
    if not trace.converged:
        raise InsufficientDataError("trace did not converge")
    exact_stop = trace.T >= 1 and trace.residuals[-1] == 0.0
    if trace.T < 5 and not exact_stop:
        raise InsufficientDataError(f"need at least 5 steps, trace has {trace.T}")
    r = trace.residuals
    start = max(1, len(r) // 2) if len(r) >= 5 else 1
    ratios = [r[t] / r[t - 1] for t in range(start, len(r)) if r[t - 1] > floor]
    if not ratios:
        raise InsufficientDataError("no usable residual ratios in the tail")
    return float(np.median(ratios))
