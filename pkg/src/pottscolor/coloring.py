"""Iterative coloring with a noise schedule, hard decoding and fixed-point search."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from pottscolor.graph import Graph, degree_feature
from pottscolor.model import ModelParams, forward
from pottscolor.potts import conflict_count, continuous_energy, one_hot

TRAJECTORY_FIELDS = ("t", "alpha", "h_soft", "conflicts_hard")


@dataclass(frozen=True)
class ColorConfig:
    T: int = 500
    alpha_min: float = 0.4
    alpha_max: float = 0.9
    noise_enabled: bool = True
    seed: int = 0
    record_trajectory: bool = True

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise ValueError("need 0 <= alpha_min <= alpha_max <= 1")


@dataclass
class ColoringResult:
    y: np.ndarray
    colors: np.ndarray
    conflicts: int
    alphas: np.ndarray
    trajectory: list = field(default_factory=list)  # decoded conflict fraction per step
    h_soft: list = field(default_factory=list)
    conflict_counts: list = field(default_factory=list)

    @property
    def conflict_fraction(self) -> float:
        return self.trajectory[-1] if self.trajectory else float("nan")


def alpha_schedule(cfg: ColorConfig) -> np.ndarray:
    """Linearly increasing mixing weights from ``alpha_min`` to ``alpha_max``."""
    return np.linspace(cfg.alpha_min, cfg.alpha_max, cfg.T)


def decode(y) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest color index."""
    return np.argmax(np.asarray(y), axis=1).astype(np.int64)


def _inputs(x, deg):
    return np.concatenate([x, deg[:, None]], axis=1)


def color(g: Graph, p: ModelParams, cfg: ColorConfig) -> ColoringResult:
    """Run the noisy iteration ``x <- f(sqrt(a_t) x + sqrt(1 - a_t) eps)`` for ``T`` steps.

    The state starts as uniformly random one-hot rows.  The degree channel is
    appended un-noised at every step.  The returned coloring is the argmax of
    the final soft state.
    """
    q = p.arch.q
    if p.arch.input_dim != q + 1:
        raise ValueError(f"model input_dim {p.arch.input_dim} is not q + 1 = {q + 1}")
    rng = np.random.default_rng(cfg.seed)
    deg = degree_feature(g)
    x = one_hot(rng.integers(0, q, g.n_nodes), q)
    alphas = alpha_schedule(cfg)
    m = max(g.n_edges, 1)
    res = ColoringResult(y=x, colors=decode(x), conflicts=0, alphas=alphas)
    for a in alphas:
        if cfg.noise_enabled:
            x = math.sqrt(a) * x + math.sqrt(1.0 - a) * rng.standard_normal(x.shape)
        x = forward(g, _inputs(x, deg), p)
        if cfg.record_trajectory:
            k = conflict_count(g, decode(x))
            res.conflict_counts.append(k)
            res.trajectory.append(k / m)
            res.h_soft.append(continuous_energy(g, x))
    res.y = x
    res.colors = decode(x)
    res.conflicts = conflict_count(g, res.colors)
    if not cfg.record_trajectory:
        res.conflict_counts.append(res.conflicts)
        res.trajectory.append(res.conflicts / m)
        res.h_soft.append(continuous_energy(g, x))
    return res


def write_trajectory(res: ColoringResult, path) -> None:
    # without per-step recording only the final row exists
    steps = range(len(res.trajectory))
    offset = len(res.alphas) - len(res.trajectory)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRAJECTORY_FIELDS)
        for t in steps:
            wr.writerow([t + offset, repr(float(res.alphas[t + offset])), repr(res.h_soft[t]), res.conflict_counts[t]])


@dataclass
class FixedPointResult:
    y: np.ndarray
    converged: bool
    n_iter: int
    h_history: list


def find_fixed_point(g: Graph, p: ModelParams, x_init, max_iter: int = 1000, tol: float = 1e-6) -> FixedPointResult:
    """Iterate the noiseless map ``y <- f(y || degree)``.

    Stops once ``|h(y_{t+1}) - h(y_t)| < tol`` holds for three consecutive
    steps (converged) or after ``max_iter`` applications.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    deg = degree_feature(g)
    y = np.asarray(x_init, dtype=np.float64)
    h_prev = continuous_energy(g, y)
    history = [h_prev]
    streak = 0
    for it in range(1, max_iter + 1):
        y = forward(g, _inputs(y, deg), p)
        h = continuous_energy(g, y)
        history.append(h)
        streak = streak + 1 if abs(h - h_prev) < tol else 0
        h_prev = h
        if streak >= 3:
            return FixedPointResult(y, True, it, history)
    return FixedPointResult(y, False, max_iter, history)
