"""
Runtime settings for the CLI and the HTTP API.

Values come from the environment where a deployment may want to change them;
numerical defaults are plain module constants.
"""
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

# ====== Environment ======
OUTPUT_DIR = os.environ.get('FPLNN_OUT', 'output')
LOG_LEVEL = os.environ.get('FPLNN_LOG_LEVEL', 'INFO').upper()
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# ====== Iteration ======
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
TIGHT_TOL = 1e-14
BOUND_SLACK = 1e-12
DIVERGENCE_GUARD = 1e12

# ====== Grids ======
GRID_GUARD = 1e8
ORACLE_GRID_GUARD = 1e7
DEFAULT_GRID = {1: 10001, 2: 201, 3: 51}

# ====== Robust iteration ======
DEFAULT_STEPS = 200
ROBUST_K_MAX = 0.95
ROBUST_CONSTANT = 20.0

# ====== Figures ======
FIG3_SEED = 42
FIG3_MS = (5.0, 15.0, 100.0)
FIG_M = 1000.0

# ====== Case studies ======
ENUMERATION_MAX_DIM = 20


def default_grid(d: int) -> int:
    """Grid points per axis for a d-dimensional certificate"""
    if d in DEFAULT_GRID:
        return DEFAULT_GRID[d]
    # keep n^d under the guard for anything larger
    return max(2, int(GRID_GUARD ** (1.0 / d)) // 4)


class Experiment(Enum):
    """CLI subcommands"""
    FIG1 = "fig1"
    FIG2 = "fig2"
    FIG3 = "fig3"
    CERTIFY = "certify"
    ITERATE = "iterate"
    ROBUST = "robust"
    CONSTRUCT = "construct"
    ENUMERATE = "enumerate"
    ORACLE = "oracle"


class Family(Enum):
    """Activation families of the case studies"""
    POLYNOMIAL = "poly"
    EXPONENTIAL = "exp"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, Family):
            return value
        text = str(value).strip().lower()
        aliases = {'poly': cls.POLYNOMIAL, 'polynomial': cls.POLYNOMIAL,
                   'exp': cls.EXPONENTIAL, 'exponential': cls.EXPONENTIAL}
        if text not in aliases:
            raise ValueError(f"unknown family {value!r} (expected poly or exp)")
        return aliases[text]


@dataclass
class ExperimentConfig:
    """One CLI/API run"""
    experiment: Experiment
    family: Family = Family.POLYNOMIAL
    d: int = 1
    m: float = FIG_M
    seed: int = FIG3_SEED
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    output_dir: Path = field(default_factory=lambda: Path(OUTPUT_DIR))
    steps: int = DEFAULT_STEPS
    grid: Optional[int] = None

    def ensure_output_dir(self) -> Path:
        """Create the output directory if needed and return it"""
        self.output_dir = Path(self.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir

    def output_path(self, suffix: str, ext: str) -> Path:
        """Deterministic file name under the output directory"""
        stem = self.experiment.value if not suffix else f"{self.experiment.value}_{suffix}"
        return self.ensure_output_dir() / f"{stem}.{ext}"
