"""Discrete and relaxed Potts energies, entropy/overlap terms and the training loss.

All functions here work on plain arrays.  The differentiable versions used
during training live in :mod:`pottscolor.diffcore` and are checked against
these.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pottscolor.graph import Graph

LOG_CLAMP = 1e-30


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the entropy and overlap terms.

    ``entropy_sign=+1`` reproduces the loss exactly as printed
    (``h + eta1*S - eta2*O`` with ``S = sum y log2 y <= 0``), which rewards
    high-entropy outputs.  ``-1`` penalises them instead.
    """

    eta1: float = 0.5
    eta2: float = 0.05
    entropy_sign: int = 1
    normalize_entropy: bool = False

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("loss weights must be non-negative")
        if self.entropy_sign not in (1, -1):
            raise ValueError("entropy_sign must be +1 or -1")


def _check_colors(g: Graph, colors) -> np.ndarray:
    colors = np.asarray(colors)
    if colors.shape != (g.n_nodes,):
        raise ValueError(f"expected {g.n_nodes} colors, got shape {colors.shape}")
    if colors.size and colors.min() < 0:
        raise ValueError("colors must be non-negative")
    return colors


def conflict_count(g: Graph, colors, q: int | None = None) -> int:
    """Number of monochromatic edges (the anti-ferromagnetic Potts energy)."""
    colors = _check_colors(g, colors)
    if q is not None and colors.size and colors.max() >= q:
        raise ValueError(f"color out of range [0, {q})")
    e = g.edges
    return int(np.count_nonzero(colors[e[:, 0]] == colors[e[:, 1]]))


def conflict_fraction(g: Graph, colors) -> float:
    if g.n_edges == 0:
        return 0.0
    return conflict_count(g, colors) / g.n_edges


def _check_rows(g: Graph, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != g.n_nodes:
        raise ValueError(f"expected {g.n_nodes} rows, got shape {y.shape}")
    return y


def continuous_energy(g: Graph, y) -> float:
    """Relaxed Potts energy per edge: mean over edges of ``<y_i, y_j>``.

    Zero for an edgeless graph.
    """
    y = _check_rows(g, y)
    if g.n_edges == 0:
        return 0.0
    e = g.edges
    return float(np.einsum("ij,ij->", y[e[:, 0]], y[e[:, 1]]) / g.n_edges)


def entropy_term(y, normalize: bool = False) -> float:
    """``sum_i sum_a y_ia log2 y_ia`` (non-positive); mean over rows if ``normalize``."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("entropy needs non-negative entries")
    s = float(np.sum(y * np.log2(np.maximum(y, LOG_CLAMP))))
    if normalize:
        s /= y.shape[0]
    return s


def overlap_term(y, xi) -> float:
    """Mean over nodes of ``<y_i, xi_i>``."""
    y = np.asarray(y, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if y.shape != xi.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {xi.shape}")
    return float(np.einsum("ij,ij->", y, xi) / y.shape[0])


def loss_terms(g: Graph, y, xi, w: LossWeights) -> dict:
    h = continuous_energy(g, y)
    s = entropy_term(y, w.normalize_entropy)
    o = overlap_term(y, xi)
    return {"loss": h + w.entropy_sign * w.eta1 * s - w.eta2 * o, "h": h, "S": s, "O": o}


def loss(g: Graph, y, xi, w: LossWeights) -> float:
    """Per-graph loss ``h + sign*eta1*S - eta2*O``; batch averaging is the caller's job."""
    return loss_terms(g, y, xi, w)["loss"]


def one_hot(colors, q: int) -> np.ndarray:
    colors = np.asarray(colors, dtype=np.int64)
    out = np.zeros((len(colors), q))
    out[np.arange(len(colors)), colors] = 1.0
    return out
