"""
Static SVG rendering of the three figures.

matplotlib runs on the Agg backend with a fixed hash salt and no date stamp so
the same data always produces the same file. Each function takes plain arrays
prepared by figures.py and only draws.
"""
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

FIGSIZE = (8, 6)
DPI = 100
plt.rcParams['svg.hashsalt'] = 'fplnn'
plt.rcParams['svg.fonttype'] = 'none'


def cobweb_path(iterates: Sequence[float]) -> np.ndarray:
    """Staircase vertices (x_t, x_t) -> (x_t, x_{t+1}) -> (x_{t+1}, x_{t+1})"""
    xs = np.asarray(iterates, dtype=np.float64)
    vertices = [(xs[0], xs[0])]
    for a, b in zip(xs[:-1], xs[1:]):
        vertices.append((a, b))
        vertices.append((b, b))
    return np.array(vertices)


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, format='svg', dpi=DPI, metadata={'Date': None})
    except OSError as e:
        raise OSError(f"failed to write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"wrote {path}")
    return path


def plot_cobweb_panels(panels: List[Dict], path) -> Path:
    """
    One panel per reduced map.

    Each panel dict holds: title, x, fx (curve samples), fixed_points (list of
    floats), paths (list of iterate sequences).
    """
    fig, axes = plt.subplots(1, len(panels), figsize=FIGSIZE, dpi=DPI, squeeze=False)
    for ax, panel in zip(axes[0], panels):
        x = np.asarray(panel['x'])
        ax.plot(x, panel['fx'], color='k', lw=1.2, label='f(x)')
        ax.plot(x, x, color='grey', ls='--', lw=0.8, label='y = x')
        for k, iterates in enumerate(panel['paths']):
            web = cobweb_path(iterates)
            ax.plot(web[:, 0], web[:, 1], lw=0.7, label=f'x0 = {iterates[0]:g}', color=f'C{k}')
        fps = np.asarray(panel['fixed_points'], dtype=np.float64)
        ax.scatter(fps, fps, color='r', zorder=3, s=18, label='fixed points')
        ax.set_xlim(x[0], x[-1])
        ax.set_xlabel('x')
        ax.set_ylabel('f(x)')
        ax.set_title(panel['title'])
        ax.legend(loc='best', fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_slices(slices: List[Dict], path) -> Path:
    """Per-dimension slices f_j against the identity; each dict has title, x, fx, fixed_points"""
    fig, axes = plt.subplots(1, len(slices), figsize=FIGSIZE, dpi=DPI, squeeze=False)
    for ax, panel in zip(axes[0], slices):
        x = np.asarray(panel['x'])
        ax.plot(x, panel['fx'], color='C0', lw=1.2, label=panel.get('label', 'f_j'))
        ax.plot(x, x, color='grey', ls='--', lw=0.8, label='identity')
        fps = np.asarray(panel['fixed_points'], dtype=np.float64)
        ax.scatter(fps, fps, color='r', zorder=3, s=18, label='fixed values')
        ax.set_xlabel(panel.get('xlabel', 'x'))
        ax.set_title(panel['title'])
        ax.legend(loc='best', fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_trajectories(trajectories: Dict[str, np.ndarray], fixed_point: np.ndarray, path) -> Path:
    """2-D perturbed trajectories (one per label) with the noiseless fixed point"""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for k, (label, xs) in enumerate(trajectories.items()):
        xs = np.asarray(xs)
        ax.plot(xs[:, 0], xs[:, 1], lw=0.8, marker='.', ms=2, color=f'C{k}', label=label)
    ax.scatter([fixed_point[0]], [fixed_point[1]], marker='*', s=120, color='k', zorder=3,
               label='noiseless fixed point')
    ax.set_xlabel('x1')
    ax.set_ylabel('x2')
    ax.set_title('perturbed iteration by noise level')
    ax.legend(loc='best', fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
