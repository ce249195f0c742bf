"""Undirected simple graphs, Erdős–Rényi and quiet-planted generators, file I/O."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pottscolor import kernels


class GraphError(ValueError):
    """Invalid graph construction or infeasible generation request."""


class GraphFormatError(GraphError):
    """Malformed graph file."""


@dataclass(frozen=True, eq=False)
class PlantedColoring:
    colors: np.ndarray
    q: int

    def __post_init__(self):
        colors = np.ascontiguousarray(self.colors, dtype=np.int64)
        if self.q < 1:
            raise GraphError(f"q must be positive, got {self.q}")
        if colors.ndim != 1 or (colors.size and (colors.min() < 0 or colors.max() >= self.q)):
            raise GraphError(f"planted colors must be a 1-d array with values in [0, {self.q})")
        colors.setflags(write=False)
        object.__setattr__(self, "colors", colors)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.colors, minlength=self.q)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    ``edges`` is an ``(M, 2)`` int64 array with ``i < j`` in every row, sorted
    lexicographically.  The CSR arrays list every edge in both directions.
    """

    n_nodes: int
    edges: np.ndarray
    planted: PlantedColoring | None = None
    csr_offsets: np.ndarray = field(init=False, repr=False)
    csr_neighbors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise GraphError(f"graph needs at least one node, got {n}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise GraphError(f"edge endpoint out of range [0, {n})")
            if np.any(edges[:, 0] == edges[:, 1]):
                bad = edges[edges[:, 0] == edges[:, 1]][0]
                raise GraphError(f"self-loop at node {bad[0]}")
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = np.ascontiguousarray(edges[order])
        if len(edges) > 1:
            dup = np.all(edges[1:] == edges[:-1], axis=1)
            if dup.any():
                i, j = edges[1:][dup][0]
                raise GraphError(f"duplicate edge ({i}, {j})")
        if self.planted is not None and len(self.planted.colors) != n:
            raise GraphError("planted coloring length does not match node count")

        # both directions, grouped by source node
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        neighbors = np.ascontiguousarray(dst[order])
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])

        for arr in (edges, neighbors, offsets):
            arr.setflags(write=False)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "csr_offsets", offsets)
        object.__setattr__(self, "csr_neighbors", neighbors)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def mean_connectivity(self) -> float:
        return 2.0 * self.n_edges / self.n_nodes

    @property
    def q(self) -> int:
        return 0 if self.planted is None else self.planted.q

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)

    def neighbors(self, node: int) -> np.ndarray:
        return self.csr_neighbors[self.csr_offsets[node]:self.csr_offsets[node + 1]]

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(receiver, sender) for all 2M directed edges in CSR order."""
        receivers = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees())
        return receivers, self.csr_neighbors

    def relabel(self, perm) -> "Graph":
        """Graph with node ``v`` renamed to ``perm[v]`` (planting carried along)."""
        perm = np.asarray(perm, dtype=np.int64)
        planted = None
        if self.planted is not None:
            colors = np.empty_like(self.planted.colors)
            colors[perm] = self.planted.colors
            planted = PlantedColoring(colors, self.planted.q)
        return Graph(self.n_nodes, perm[self.edges], planted)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n_nodes != other.n_nodes or not np.array_equal(self.edges, other.edges):
            return False
        if (self.planted is None) != (other.planted is None):
            return False
        if self.planted is None:
            return True
        return self.planted.q == other.planted.q and np.array_equal(
            self.planted.colors, other.planted.colors
        )

    __hash__ = None


def edge_count(n: int, c: float) -> int:
    """Number of edges ``round(n * c / 2)`` for mean connectivity ``c``."""
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    if c < 0:
        raise GraphError(f"connectivity must be non-negative, got {c}")
    m = int(math.floor(n * c / 2.0 + 0.5))
    if m > n * (n - 1) // 2:
        raise GraphError(f"infeasible density: {m} edges requested, only {n * (n - 1) // 2} possible")
    return m


def balanced_class_sizes(n: int, q: int) -> np.ndarray:
    sizes = np.full(q, n // q, dtype=np.int64)
    sizes[: n % q] += 1
    return sizes


def hetero_pair_count(n: int, q: int) -> int:
    """Number of node pairs with different colors under a balanced q-coloring."""
    sizes = balanced_class_sizes(n, q)
    return n * (n - 1) // 2 - int(np.sum(sizes * (sizes - 1) // 2))


def _sample_edges(colors: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``m`` distinct edges whose endpoints have different colors.

    Uniform node pairs are drawn in blocks and fed to the kernel, which
    rejects monochromatic pairs and duplicates.  ``1000 * m`` consecutive
    rejections abort the sampling.
    """
    n = len(colors)
    edges = np.zeros((m, 2), dtype=np.int64)
    if m == 0:
        return edges
    sizes = np.bincount(colors)
    hetero = n * (n - 1) // 2 - int(np.sum(sizes * (sizes - 1) // 2))
    p_pair = 2.0 * hetero / (n * n)
    cap = 1000 * m
    have = 0
    run = 0
    while have < m:
        remaining = m - have
        # expected acceptance for the next draws: hetero pair and not yet taken
        p = p_pair * max(1.0 - have / hetero, 1.0 / hetero)
        block = int(min(1.2 * remaining / p + 64, 4_000_000))
        pairs = rng.integers(0, n, size=(block, 2), dtype=np.int64)
        have, _, run = kernels.accept_pairs(colors, pairs, edges, have, m, run, cap)
        if run >= cap:
            raise GraphError(f"edge sampling stalled after {cap} consecutive rejections")
    return edges


def generate_er(n: int, c: float, seed: int) -> Graph:
    """Erdős–Rényi G(N, M) graph with exactly ``edge_count(n, c)`` edges."""
    m = edge_count(n, c)
    rng = np.random.default_rng(seed)
    edges = _sample_edges(np.arange(n, dtype=np.int64), m, rng)
    return Graph(n, edges)


def generate_planted(n: int, c: float, q: int, seed: int) -> tuple[Graph, PlantedColoring]:
    """Quiet-planted graph: balanced coloring first, then only hetero-chromatic edges."""
    if q < 2:
        raise GraphError(f"planting needs q >= 2, got {q}")
    m = edge_count(n, c)
    limit = hetero_pair_count(n, q)
    if m > limit:
        raise GraphError(f"infeasible density: {m} edges requested, only {limit} hetero-chromatic pairs")
    rng = np.random.default_rng(seed)
    colors = np.empty(n, dtype=np.int64)
    colors[rng.permutation(n)] = np.arange(n, dtype=np.int64) % q
    edges = _sample_edges(colors, m, rng)
    planted = PlantedColoring(colors, q)
    return Graph(n, edges, planted), planted


def degree_feature(g: Graph) -> np.ndarray:
    """Node degree divided by the mean connectivity (all zeros for an edgeless graph)."""
    deg = g.degrees().astype(np.float64)
    c = g.mean_connectivity
    if c == 0:
        return np.zeros(g.n_nodes)
    return deg / c


def format_graph(g: Graph) -> str:
    lines = [f"{g.n_nodes} {g.n_edges} {g.q}"]
    if g.planted is not None:
        lines.append(" ".join(map(str, g.planted.colors.tolist())))
    lines.extend(f"{i} {j}" for i, j in g.edges.tolist())
    return "\n".join(lines) + "\n"


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8", newline="\n")


def parse_graph(text: str) -> Graph:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise GraphFormatError("empty graph file")
    header = lines[0].split()
    if len(header) != 3:
        raise GraphFormatError(f"header must be 'N M q', got {lines[0]!r}")
    try:
        n, m, q = (int(tok) for tok in header)
    except ValueError:
        raise GraphFormatError(f"non-integer header {lines[0]!r}") from None
    if n < 1 or m < 0 or q < 0:
        raise GraphFormatError(f"invalid header values {lines[0]!r}")
    body = lines[1:]
    planted = None
    if q > 0:
        if not body:
            raise GraphFormatError("missing planted color line")
        try:
            colors = np.array([int(tok) for tok in body[0].split()], dtype=np.int64)
        except ValueError:
            raise GraphFormatError("non-integer planted color") from None
        if len(colors) != n:
            raise GraphFormatError(f"expected {n} planted colors, got {len(colors)}")
        if colors.size and (colors.min() < 0 or colors.max() >= q):
            raise GraphFormatError(f"planted color out of range [0, {q})")
        planted = PlantedColoring(colors, q)
        body = body[1:]
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} edges but file lists {len(body)}")
    edges = np.empty((m, 2), dtype=np.int64)
    for k, ln in enumerate(body):
        tok = ln.split()
        if len(tok) != 2:
            raise GraphFormatError(f"edge line {k + 1} malformed: {ln!r}")
        try:
            i, j = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphFormatError(f"edge line {k + 1} not integer: {ln!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"edge ({i}, {j}) index out of range [0, {n})")
        if i == j:
            raise GraphFormatError(f"self-loop ({i}, {j})")
        edges[k] = (i, j)
    try:
        return Graph(n, edges, planted)
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from None


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))
