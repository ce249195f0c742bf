"""Denoising training of the coloring network on quiet-planted graphs.

Each step corrupts a planted one-hot coloring with Gaussian noise,
``sqrt(alpha) * xi + sqrt(1 - alpha) * eps``, runs the network and descends the
loss ``h + sign*eta1*S - eta2*O`` with Adam.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pottscolor import diffcore as dc
from pottscolor.graph import Graph, degree_feature, read_graph
from pottscolor.model import ArchSpec, ModelParams, forward, init_params
from pottscolor.potts import LOG_CLAMP, LossWeights, loss_terms, one_hot

log = logging.getLogger(__name__)

TRAIN_LOG_FIELDS = ("epoch", "split", "loss", "h", "S", "O")


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    alpha_min: float = 0.4
    alpha_max: float = 0.9
    eta1: float = 0.5
    eta2: float = 0.05
    entropy_sign: int = 1
    normalize_entropy: bool = False
    warmup_epochs_eta1: int | None = None  # None: never switched off
    warmup_epochs_eta2: int | None = 1
    epochs: int = 2000
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.1
    manifest: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise ValueError("need 0 <= alpha_min <= alpha_max <= 1")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")

    def weights_at(self, epoch: int) -> LossWeights:
        """Loss weights for a 0-based epoch index, after warm-up switch-offs."""
        eta1 = self.eta1
        eta2 = self.eta2
        if self.warmup_epochs_eta1 is not None and epoch >= self.warmup_epochs_eta1:
            eta1 = 0.0
        if self.warmup_epochs_eta2 is not None and epoch >= self.warmup_epochs_eta2:
            eta2 = 0.0
        return LossWeights(eta1, eta2, self.entropy_sign, self.normalize_entropy)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], 0)


def adam_step(p: ModelParams, grads, st: AdamState, cfg: TrainConfig) -> tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update; returns new params and state (inputs untouched)."""
    lr = cfg.learning_rate
    arrays = p.arrays()
    if len(grads) != len(arrays):
        raise ValueError(f"expected {len(arrays)} gradients, got {len(grads)}")
    for k, g in enumerate(grads):
        if g.shape != arrays[k].shape:
            raise ValueError(f"gradient {k} has shape {g.shape}, parameter {arrays[k].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {p.names[k // 2]} ({'W' if k % 2 == 0 else 'b'})")
    t = st.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_arrays, new_m, new_v = [], [], []
    for a, g, m, v in zip(arrays, grads, st.m, st.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_arrays.append(a - lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps_adam))
        new_m.append(m)
        new_v.append(v)
    return p.with_arrays(new_arrays), AdamState(new_m, new_v, t)


def corrupt(xi, deg, alpha: float, seed) -> np.ndarray:
    """Noisy input features: corrupted color channels plus the clean degree channel.

    ``seed`` may be an int or a :class:`numpy.random.Generator`.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    xi = np.asarray(xi, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eps = rng.standard_normal(xi.shape)
    colors = math.sqrt(alpha) * xi + math.sqrt(1.0 - alpha) * eps
    return np.concatenate([colors, np.asarray(deg, dtype=np.float64).reshape(-1, 1)], axis=1)


def loss_on_tape(g: Graph, y: dc.Tensor, xi: np.ndarray, w: LossWeights):
    """Differentiable per-graph loss; returns ``(loss tensor, {"h", "S", "O"})``."""
    n = g.n_nodes
    m = max(g.n_edges, 1)
    e = g.edges
    energy = dc.edge_inner_sum(y, e[:, 0], e[:, 1])
    ent = dc.xlogx_sum(y, LOG_CLAMP)
    ovl = dc.inner_const(y, xi)
    s_scale = 1.0 / n if w.normalize_entropy else 1.0
    total = dc.linear_combination(
        [(1.0 / m, energy), (w.entropy_sign * w.eta1 * s_scale, ent), (-w.eta2 / n, ovl)]
    )
    terms = {
        "h": float(energy.value) / m,
        "S": float(ent.value) * s_scale,
        "O": float(ovl.value) / n,
    }
    return total, terms


def loss_lower_bound(g: Graph, q: int, w: LossWeights) -> float:
    """Smallest value the per-graph loss can take for row-stochastic outputs."""
    s_min = -math.log2(q) * (1 if w.normalize_entropy else g.n_nodes)
    entropy_floor = w.entropy_sign * w.eta1 * s_min if w.entropy_sign > 0 else 0.0
    return entropy_floor - w.eta2


def graph_loss_and_grad(g: Graph, x0, xi, p: ModelParams, w: LossWeights):
    tape = dc.Tape()
    y = forward(g, x0, p, tape)
    total, terms = loss_on_tape(g, y, xi, w)
    grads = tape.backward(total)
    terms["loss"] = float(total.value)
    return terms, grads


def read_manifest(path) -> list[Path]:
    """Graph paths listed one per line; relative paths resolve against the manifest's folder."""
    path = Path(path)
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        out.append(p if p.is_absolute() else path.parent / p)
    return out


def write_manifest(paths, path) -> None:
    path = Path(path)
    lines = []
    for p in paths:
        p = Path(p)
        try:
            p = p.relative_to(path.parent)
        except ValueError:
            pass
        lines.append(str(p))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def split_dataset(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, validation) index arrays."""
    order = np.random.default_rng([seed, 7]).permutation(n)
    n_val = int(round(val_fraction * n)) if n > 1 else 0
    if val_fraction > 0 and n > 1:
        n_val = max(n_val, 1)
    return np.sort(order[n_val:]), np.sort(order[:n_val])


@dataclass
class TrainResult:
    params: ModelParams
    log: list = field(default_factory=list)
    train_indices: np.ndarray | None = None
    val_indices: np.ndarray | None = None

    def last(self, split: str) -> dict | None:
        rows = [r for r in self.log if r["split"] == split]
        return rows[-1] if rows else None


def _evaluate(graphs, idx, p, w, alpha, seed):
    rng = np.random.default_rng(seed)
    acc = {"loss": 0.0, "h": 0.0, "S": 0.0, "O": 0.0}
    for k in idx:
        g = graphs[k]
        xi = one_hot(g.planted.colors, g.planted.q)
        x0 = corrupt(xi, degree_feature(g), alpha, rng)
        y = forward(g, x0, p)
        terms = loss_terms(g, y, xi, w)
        for key in acc:
            acc[key] += terms[key]
    return {k: v / len(idx) for k, v in acc.items()}


def train(cfg: TrainConfig, arch: ArchSpec, graphs: list[Graph] | None = None,
          params: ModelParams | None = None, progress=None) -> TrainResult:
    """Train on planted graphs (given directly or via ``cfg.manifest``).

    ``progress`` is an optional callable receiving each epoch's log rows.
    """
    if graphs is None:
        if cfg.manifest is None:
            raise TrainingError("no training graphs: pass graphs or set manifest")
        graphs = [read_graph(p) for p in read_manifest(cfg.manifest)]
    if not graphs:
        raise TrainingError("empty dataset")
    for k, g in enumerate(graphs):
        if g.planted is None:
            raise TrainingError(f"graph {k} has no planted coloring")
        if g.planted.q != arch.q:
            raise TrainingError(f"graph {k} planted with q={g.planted.q}, model has q={arch.q}")
    if arch.input_dim != arch.q + 1:
        raise TrainingError(f"input_dim must be q + 1 = {arch.q + 1}")

    train_idx, val_idx = split_dataset(len(graphs), cfg.val_fraction, cfg.seed)
    p = params.copy() if params is not None else init_params(arch, cfg.seed)
    state = AdamState.zeros_like(p)
    rng = np.random.default_rng([cfg.seed, 1])
    feats = [degree_feature(g) for g in graphs]
    onehots = [one_hot(g.planted.colors, arch.q) for g in graphs]
    val_alpha = 0.5 * (cfg.alpha_min + cfg.alpha_max)
    history = []

    for epoch in range(cfg.epochs):
        w = cfg.weights_at(epoch)
        order = rng.permutation(train_idx)
        sums = {"loss": 0.0, "h": 0.0, "S": 0.0, "O": 0.0}
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            acc = None
            for k in batch:
                g = graphs[k]
                alpha = rng.uniform(cfg.alpha_min, cfg.alpha_max)
                x0 = corrupt(onehots[k], feats[k], alpha, rng)
                terms, grads = graph_loss_and_grad(g, x0, onehots[k], p, w)
                if not math.isfinite(terms["loss"]):
                    raise TrainingError(f"loss diverged at epoch {epoch}")
                bound = loss_lower_bound(g, arch.q, w)
                if terms["loss"] < bound - 1e-9:
                    raise TrainingError(f"loss {terms['loss']} below its lower bound {bound}")
                for key in sums:
                    sums[key] += terms[key]
                acc = grads if acc is None else [a + b for a, b in zip(acc, grads)]
            p, state = adam_step(p, [a / len(batch) for a in acc], state, cfg)
        rows = [{"epoch": epoch, "split": "train", **{k: v / len(order) for k, v in sums.items()}}]
        if len(val_idx):
            vals = _evaluate(graphs, val_idx, p, w, val_alpha, [cfg.seed, 2])
            rows.append({"epoch": epoch, "split": "val", **vals})
        history.extend(rows)
        log.debug("epoch %d: %s", epoch, rows)
        if progress is not None:
            progress(rows)
    return TrainResult(p, history, train_idx, val_idx)


def write_train_log(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=TRAIN_LOG_FIELDS, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(float(r[k])) if k in ("loss", "h", "S", "O") else r[k]) for k in TRAIN_LOG_FIELDS})


def read_train_log(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {"epoch": int(r["epoch"]), "split": r["split"],
             **{k: float(r[k]) for k in ("loss", "h", "S", "O")}}
            for r in csv.DictReader(fh)
        ]


__all__ = [
    "TrainConfig", "AdamState", "TrainResult", "TrainingError", "adam_step", "corrupt",
    "loss_on_tape", "loss_lower_bound", "graph_loss_and_grad", "train", "split_dataset",
    "read_manifest", "write_manifest", "write_train_log", "read_train_log",
]
