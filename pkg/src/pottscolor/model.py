"""L-layer message-passing network mapping noisy color features to soft colorings.

Layer ``l`` computes a message ``phi_l(x_i || x_j)`` on every directed edge
``j -> i``, aggregates the messages per receiver, and updates
``x_i <- gamma_l(x_i || agg_i)``.  The readout ``Gamma`` sees the input and all
``L`` hidden feature blocks and ends in a row-wise softmax over ``q`` colors.
Every MLP is ``affine -> ReLU -> affine``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pottscolor import diffcore as dc
from pottscolor.graph import Graph

AGGREGATIONS = ("sum", "mean", "max")

CHECKPOINT_MAGIC = b"PGC1"
CHECKPOINT_VERSION = 1

# Per-MLP parameter counts of the published 5-layer, 32-latent, q=5 model.
# The widths behind these numbers are not recoverable; kept for reference only.
REFERENCE_PARAM_TABLE = {
    "phi1": 2673, "gamma1": 3564,
    "phi2": 4455, "gamma2": 4455,
    "phi3": 4455, "gamma3": 4455,
    "phi4": 4455, "gamma4": 4455,
    "phi5": 4455, "gamma5": 4455,
    "readout": 6968,
}
REFERENCE_PARAM_TOTAL = 48845


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ArchSpec:
    n_layers: int = 5
    latent_dim: int = 32
    q: int = 5
    input_dim: int = 6
    mlp_hidden: tuple = ()  # (phi, gamma, readout) hidden widths; empty -> latent_dim
    aggregation: str = "sum"

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.mlp_hidden) or (self.latent_dim,) * 3
        if len(hidden) == 1:
            hidden = hidden * 3
        object.__setattr__(self, "mlp_hidden", hidden)
        if self.n_layers < 1 or self.latent_dim < 1 or self.q < 1 or self.input_dim < 1:
            raise ValueError(f"invalid architecture {self}")
        if len(hidden) != 3 or min(hidden) < 1:
            raise ValueError("mlp_hidden needs three positive widths (phi, gamma, readout)")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")

    def layer_shapes(self) -> list[tuple[str, int, int]]:
        """``(name, out, in)`` for every affine map, in parameter order."""
        h_phi, h_gamma, h_out = self.mlp_hidden
        d = self.latent_dim
        shapes = []
        for l in range(1, self.n_layers + 1):
            d_prev = self.input_dim if l == 1 else d
            shapes += [(f"phi{l}.0", h_phi, 2 * d_prev), (f"phi{l}.1", d, h_phi)]
            shapes += [(f"gamma{l}.0", h_gamma, d_prev + d), (f"gamma{l}.1", d, h_gamma)]
        readout_in = self.input_dim + self.n_layers * d
        shapes += [("readout.0", h_out, readout_in), ("readout.1", self.q, h_out)]
        return shapes


@dataclass
class ModelParams:
    arch: ArchSpec
    weights: list  # list of (W, b) arrays, in ArchSpec.layer_shapes() order
    seed: int = -1
    names: list = field(init=False, repr=False)

    def __post_init__(self):
        shapes = self.arch.layer_shapes()
        if len(shapes) != len(self.weights):
            raise ValueError(f"expected {len(shapes)} affine maps, got {len(self.weights)}")
        for (name, out, inp), (W, b) in zip(shapes, self.weights):
            if W.shape != (out, inp) or b.shape != (out,):
                raise ValueError(f"{name}: expected W{(out, inp)} b{(out,)}, got W{W.shape} b{b.shape}")
        self.names = [s[0] for s in shapes]

    def arrays(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` (the training parameter order)."""
        return [a for pair in self.weights for a in pair]

    def with_arrays(self, arrays) -> "ModelParams":
        it = iter(arrays)
        return ModelParams(self.arch, [(next(it), next(it)) for _ in self.weights], self.seed)

    def copy(self) -> "ModelParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    @property
    def total_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_params(arch: ArchSpec, seed: int) -> ModelParams:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    weights = []
    for _, out, inp in arch.layer_shapes():
        bound = 1.0 / np.sqrt(inp)
        weights.append((rng.uniform(-bound, bound, size=(out, inp)), np.zeros(out)))
    return ModelParams(arch, weights, seed)


def count_params(p: ModelParams | ArchSpec) -> tuple[list[tuple[str, int]], int]:
    """Per-MLP parameter counts ``out * (in + 1)`` summed over its affine maps, plus total."""
    arch = p.arch if isinstance(p, ModelParams) else p
    groups: dict[str, int] = {}
    for name, out, inp in arch.layer_shapes():
        key = name.split(".")[0]
        groups[key] = groups.get(key, 0) + out * (inp + 1)
    rows = list(groups.items())
    return rows, sum(n for _, n in rows)


def _mlp(x, W0, b0, W1, b1):
    return dc.affine(dc.relu(dc.affine(x, W0, b0)), W1, b1)


def _aggregate(kind, messages, targets, n):
    if kind == "sum":
        return dc.segment_sum(messages, targets, n)
    if kind == "mean":
        return dc.segment_mean(messages, targets, n)
    return dc.segment_max(messages, targets, n)


def apply(g: Graph, x0: dc.Tensor, arch: ArchSpec, w: list) -> dc.Tensor:
    """Forward pass on tensors; ``w`` is the flat ``[W0, b0, ...]`` tensor list."""
    n = g.n_nodes
    recv, send = g.directed_edges()
    per_layer = 8
    feats = [x0]
    x = x0
    for l in range(arch.n_layers):
        W = w[l * per_layer:(l + 1) * per_layer]
        pair = dc.concat_cols(dc.gather_rows(x, recv), dc.gather_rows(x, send))
        messages = _mlp(pair, *W[:4])
        agg = _aggregate(arch.aggregation, messages, recv, n)
        x = _mlp(dc.concat_cols(x, agg), *W[4:])
        feats.append(x)
    logits = _mlp(dc.concat_cols(*feats), *w[arch.n_layers * per_layer:])
    return dc.softmax_rows(logits)


def forward(g: Graph, x0, p: ModelParams, tape: dc.Tape | None = None):
    """Soft coloring for input features ``x0`` of shape (N, input_dim).

    Without a tape returns an ndarray.  With a tape, the parameters are
    registered on it (in :meth:`ModelParams.arrays` order) and the output
    :class:`~pottscolor.diffcore.Tensor` is returned.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (g.n_nodes, p.arch.input_dim):
        raise ValueError(f"expected input of shape {(g.n_nodes, p.arch.input_dim)}, got {x0.shape}")
    if tape is None:
        w = [dc.Tensor(a) for a in p.arrays()]
        return apply(g, dc.Tensor(x0), p.arch, w).value
    w = [tape.parameter(a) for a in p.arrays()]
    return apply(g, tape.constant(x0), p.arch, w)


# -- checkpoints -------------------------------------------------------------

def checkpoint_bytes(p: ModelParams) -> bytes:
    a = p.arch
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<I", CHECKPOINT_VERSION),
        struct.pack("<5I", a.n_layers, a.latent_dim, a.q, a.input_dim, len(a.mlp_hidden)),
        struct.pack(f"<{len(a.mlp_hidden)}I", *a.mlp_hidden),
        struct.pack("<Iq", AGGREGATIONS.index(a.aggregation), p.seed),
        struct.pack("<I", len(p.weights)),
    ]
    for W, b in p.weights:
        parts.append(struct.pack("<II", *W.shape))
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(p: ModelParams, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(p))


def parse_checkpoint(data: bytes) -> ModelParams:
    pos = 0

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise CheckpointError("truncated checkpoint")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic {data[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    pos = 4
    (version,) = take("<I")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (this build reads {CHECKPOINT_VERSION})")
    n_layers, latent, q, input_dim, n_hidden = take("<5I")
    hidden = take(f"<{n_hidden}I")
    agg_id, seed = take("<Iq")
    if agg_id >= len(AGGREGATIONS):
        raise CheckpointError(f"unknown aggregation id {agg_id}")
    try:
        arch = ArchSpec(n_layers, latent, q, input_dim, tuple(hidden), AGGREGATIONS[agg_id])
    except ValueError as exc:
        raise CheckpointError(f"invalid architecture block: {exc}") from None
    (n_affine,) = take("<I")
    shapes = arch.layer_shapes()
    if n_affine != len(shapes):
        raise CheckpointError(f"architecture implies {len(shapes)} affine maps, file has {n_affine}")
    weights = []
    for name, out, inp in shapes:
        rows, cols = take("<II")
        if (rows, cols) != (out, inp):
            raise CheckpointError(f"{name}: shape {(rows, cols)} inconsistent with architecture {(out, inp)}")
        count = rows * cols + rows
        if pos + 8 * count > len(data):
            raise CheckpointError("truncated checkpoint")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
        pos += 8 * count
        weights.append((arr[: rows * cols].reshape(rows, cols).copy(), arr[rows * cols:].copy()))
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after last layer")
    return ModelParams(arch, weights, seed)


def load_checkpoint(path) -> ModelParams:
    return parse_checkpoint(Path(path).read_bytes())
