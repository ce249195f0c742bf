"""Scaling sweeps, power-law fits, noise/overlap studies and throughput tables."""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from pottscolor.annealing import SaConfig, anneal
from pottscolor.coloring import ColorConfig, color, find_fixed_point
from pottscolor.graph import Graph, degree_feature, generate_er, generate_planted
from pottscolor.model import ModelParams, forward
from pottscolor.potts import continuous_energy, one_hot, overlap_term

# Clustering threshold for q = 5 on Erdős–Rényi graphs.
C_D = 12.837
TRAINING_C_RANGE = (12.5, 15.0)
BENCHMARK_C_GRID = (11.0, 11.5, 12.0, 12.5, 13.0, 13.5, 14.0, 14.5, 15.0, 15.5)
DEFAULT_ITERATION_GRID = tuple(100 * 2 ** k for k in range(11))

# Published iterations/second (GPU network; SA in the n=10000 row). Hardware
# dependent: reference metadata only.
REFERENCE_THROUGHPUT = {
    (1000, 11.5): {"gnn": 173}, (1000, 13.0): {"gnn": 231},
    (1000, 13.5): {"gnn": 229}, (1000, 15.5): {"gnn": 227},
    (3000, 11.5): {"gnn": 211}, (3000, 13.0): {"gnn": 217},
    (3000, 13.5): {"gnn": 219}, (3000, 15.5): {"gnn": 218},
    (10000, 11.5): {"gnn": 172, "sa": 469}, (10000, 13.0): {"gnn": 212, "sa": 441},
    (10000, 13.5): {"gnn": 215, "sa": 429}, (10000, 15.5): {"gnn": 185, "sa": 384},
    (30000, 11.5): {"gnn": 132}, (30000, 13.0): {"gnn": 120},
    (30000, 13.5): {"gnn": 117}, (30000, 15.5): {"gnn": 104},
    (100000, 11.5): {"gnn": 37}, (100000, 13.0): {"gnn": 33},
    (100000, 13.5): {"gnn": 32}, (100000, 15.5): {"gnn": 28},
}

METHODS = ("gnn", "sa")
GRAPH_KINDS = ("planted", "random")
RECORD_FIELDS = ("method", "kind", "n", "c", "q", "iterations", "seed", "conflict_fraction", "wall_seconds")
FIT_FIELDS = ("c", "A", "A_err", "B", "B_err", "C", "C_err", "residual", "converged")


@dataclass(frozen=True)
class RunRecord:
    method: str
    kind: str
    n: int
    c: float
    q: int
    iterations: int
    seed: int
    conflict_fraction: float
    wall_seconds: float

    def __post_init__(self):
        if self.method not in METHODS or self.kind not in GRAPH_KINDS:
            raise ValueError(f"unknown method/kind {self.method}/{self.kind}")
        if not 0.0 <= self.conflict_fraction <= 1.0:
            raise ValueError(f"conflict_fraction {self.conflict_fraction} outside [0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class FitResult:
    A: float
    B: float
    C: float
    residual: float
    A_err: float = float("nan")
    B_err: float = float("nan")
    C_err: float = float("nan")
    converged: bool = False
    degenerate: bool = False

    def __call__(self, x):
        return self.A * np.asarray(x, dtype=np.float64) ** (-self.B) + self.C


# -- sweeps ------------------------------------------------------------------

def graph_seed(seed: int, kind: str, n: int, c: float, index: int) -> int:
    ss = np.random.SeedSequence([seed, GRAPH_KINDS.index(kind), n, int(round(c * 1000)), index])
    return int(ss.generate_state(1)[0])


def make_graph(kind: str, n: int, c: float, q: int, seed: int) -> Graph:
    if kind == "planted":
        return generate_planted(n, c, q, seed)[0]
    return generate_er(n, c, seed)


def run_method(method: str, g: Graph, iterations: int, seed: int, params: ModelParams | None = None,
               sa_config: SaConfig | None = None, color_config: ColorConfig | None = None,
               q: int = 5) -> float:
    """Conflict fraction reached by one method after ``iterations`` iterations."""
    m = max(g.n_edges, 1)
    if method == "gnn":
        if params is None:
            raise ValueError("method 'gnn' needs model parameters")
        cfg = replace(color_config or ColorConfig(), T=iterations, seed=seed, record_trajectory=False)
        return color(g, params, cfg).conflicts / m
    if method == "sa":
        cfg = replace(sa_config or SaConfig(q=q), n_sweeps=iterations, seed=seed, q=q)
        return anneal(g, cfg).conflicts / m
    raise ValueError(f"unknown method {method!r}")


def _run_job(job):
    method, kind, n, c, q, iterations, gseed, params, sa_config, color_config = job
    g = make_graph(kind, n, c, q, gseed)
    t0 = time.perf_counter()
    frac = run_method(method, g, iterations, gseed, params, sa_config, color_config, q)
    return RunRecord(method, kind, n, float(c), q, iterations, gseed, frac, time.perf_counter() - t0)


def sweep(methods, graph_kinds, n_values, c_values, iteration_grid=DEFAULT_ITERATION_GRID,
          n_graphs_per_point: int = 10, seed: int = 0, q: int = 5, params: ModelParams | None = None,
          sa_config: SaConfig | None = None, color_config: ColorConfig | None = None,
          workers: int = 1) -> list[RunRecord]:
    """One record per (method, kind, n, c, iterations, graph).

    All methods and iteration counts at a grid point see the same graphs.
    Records come back in grid order regardless of ``workers``.
    """
    grids = [list(methods), list(graph_kinds), list(n_values), list(c_values), list(iteration_grid)]
    if any(len(gr) == 0 for gr in grids) or n_graphs_per_point < 1:
        raise ValueError("all sweep grids must be nonempty")
    jobs = []
    for kind in graph_kinds:
        for n in n_values:
            for c in c_values:
                for gi in range(n_graphs_per_point):
                    gseed = graph_seed(seed, kind, n, c, gi)
                    for method in methods:
                        for it in iteration_grid:
                            jobs.append((method, kind, int(n), float(c), q, int(it), gseed,
                                         params, sa_config, color_config))
    if workers <= 1:
        cache: dict = {}
        out = []
        for job in jobs:
            method, kind, n, c, q_, it, gseed = job[:7]
            key = (kind, n, c, gseed)
            if key not in cache:
                cache = {key: make_graph(kind, n, c, q_, gseed)}
            g = cache[key]
            t0 = time.perf_counter()
            frac = run_method(method, g, it, gseed, params, sa_config, color_config, q_)
            out.append(RunRecord(method, kind, n, c, q_, it, gseed, frac, time.perf_counter() - t0))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def aggregate(records) -> list[dict]:
    """Mean and sample standard deviation over graphs per (method, kind, n, c, iterations)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.method, r.kind, r.n, r.c, r.iterations), []).append(r.conflict_fraction)
    rows = []
    for (method, kind, n, c, it), vals in sorted(groups.items()):
        v = np.asarray(vals)
        rows.append({
            "method": method, "kind": kind, "n": n, "c": c, "iterations": it,
            "mean": float(v.mean()), "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
            "count": len(v),
        })
    return rows


# -- power-law fit -----------------------------------------------------------

def _grid_fit(x, y, bs, w2):
    """Best (A, C) per exponent in ``bs`` by closed-form weighted linear least squares."""
    u = x[None, :] ** (-bs[:, None])
    sw = w2.sum()
    su, suu = (w2 * u).sum(1), (w2 * u * u).sum(1)
    sy, suy = (w2 * y).sum(), (w2 * u * y).sum(1)
    det = sw * suu - su * su
    safe = np.where(np.abs(det) > 0, det, np.inf)
    A = (sw * suy - su * sy) / safe
    C = (suu * sy - su * suy) / safe
    sse = (w2 * (A[:, None] * u + C[:, None] - y) ** 2).sum(1)
    return A, C, sse


def _sse(x, y, w2, A, B, C):
    return float(np.sum(w2 * (A * x ** (-B) + C - y) ** 2))


def _fit_core(x, y, w, b_range=(0.01, 3.0), n_grid=200, max_iter=200):
    w2 = w * w
    bs = np.logspace(np.log10(b_range[0]), np.log10(b_range[1]), n_grid)
    As, Cs, sses = _grid_fit(x, y, bs, w2)
    k = int(np.argmin(sses))
    A, B, C = float(As[k]), float(bs[k]), float(Cs[k])
    sse = float(sses[k])
    lx = np.log(x)
    scale = max(float(np.max(np.abs(w * y))), 1e-300)
    converged = False
    for _ in range(max_iter):
        u = x ** (-B)
        r = w * (A * u + C - y)
        J = w[:, None] * np.column_stack([u, -A * u * lx, np.ones_like(x)])
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        improved = False
        for _ in range(40):
            cand = (A + t * step[0], B + t * step[1], C + t * step[2])
            s = _sse(x, y, w2, *cand)
            if s <= sse:
                improved = True
                break
            t *= 0.5
        small = np.all(np.abs(t * step) <= 1e-12 * (1.0 + np.abs([A, B, C])))
        if improved:
            A, B, C = cand
            gain = sse - s
            sse = s
        else:
            gain = 0.0
        if small or gain <= 1e-15 * max(sse, scale * scale * 1e-20) or sse <= (1e-15 * scale) ** 2:
            converged = True
            break
    amp = float(np.max(np.abs(y)))
    degenerate = abs(A) * float(np.max(x ** (-B))) <= 1e-9 * max(amp, 1e-300) or B <= b_range[0] * 1e-3
    if degenerate or B < 0:
        converged = False
    return A, B, C, sse, converged, degenerate


def fit_power_law(x, y, n_bootstrap: int = 200, seed: int = 0, sigma=None) -> FitResult:
    """Least-squares fit of ``A * x**(-B) + C``.

    A 200-point log grid over B in [0.01, 3] with closed-form (A, C) picks the
    start; Gauss-Newton with step halving refines it.  ``sigma`` optionally
    gives per-point uncertainties (residuals are divided by it); the reported
    residual is the weighted sum of squares.  Parameter errors are standard
    deviations over ``n_bootstrap`` residual-bootstrap refits.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if len(x) < 4:
        raise ValueError(f"need at least 4 points, got {len(x)}")
    if np.any(x <= 0):
        raise ValueError("x must be strictly positive")
    if np.all(x == x[0]):
        raise ValueError("x values are all equal")
    if sigma is None:
        w = np.ones_like(x)
    else:
        sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), x.shape)
        if np.any(~(sigma > 0)):
            raise ValueError("sigma must be strictly positive")
        w = 1.0 / sigma
    A, B, C, sse, converged, degenerate = _fit_core(x, y, w)
    errs = (float("nan"),) * 3
    if n_bootstrap > 0 and not degenerate:
        rng = np.random.default_rng(seed)
        fitted = A * x ** (-B) + C
        std_resid = (y - fitted) * w
        samples = []
        for _ in range(n_bootstrap):
            yb = fitted + rng.choice(std_resid, size=len(x), replace=True) / w
            samples.append(_fit_core(x, yb, w)[:3])
        errs = tuple(float(v) for v in np.std(np.asarray(samples), axis=0, ddof=1))
    return FitResult(float(A), float(B), float(C), float(sse), *errs, converged=bool(converged),
                     degenerate=bool(degenerate))


def fit_records(records, n_bootstrap: int = 200, seed: int = 0) -> list[tuple[tuple, FitResult]]:
    """Fit mean conflict fraction vs iterations per (method, kind, n, c)."""
    groups: dict = {}
    for row in aggregate(records):
        groups.setdefault((row["method"], row["kind"], row["n"], row["c"]), []).append(row)
    out = []
    for key, rows in sorted(groups.items()):
        x = np.array([r["iterations"] for r in rows], dtype=np.float64)
        y = np.array([r["mean"] for r in rows])
        out.append((key, fit_power_law(x, y, n_bootstrap, seed)))
    return out


# -- noise / overlap study ---------------------------------------------------

NOISE_FIELDS = (
    "alpha",
    "dh_planted_mean", "dh_planted_std", "dh_fp_mean", "dh_fp_std",
    "overlap_planted_mean", "overlap_planted_std", "overlap_fp_mean", "overlap_fp_std",
    "d_overlap_mean", "d_overlap_std",
)


def noise_study(g: Graph, p: ModelParams, alphas, n_samples: int, seed: int,
                fixed_point: np.ndarray | None = None, fp_max_iter: int = 1000,
                fp_tol: float = 1e-6) -> list[dict]:
    """Energy and overlap change when a configuration is corrupted and passed once through the model.

    Compares the planted solution ``xi`` with a noiseless fixed point
    ``x_fp`` of the model.  Per alpha and noise draw ``eps`` (shared by both):
    ``xi~ = f(sqrt(a) xi + sqrt(1-a) eps)`` and likewise for ``x_fp``; the rows
    report mean and standard deviation over draws of ``h(xi~) - h(xi)``,
    ``h(x_fp~) - h(x_fp)``, ``O(xi~, xi)``, ``O(x_fp~, x_fp)`` and their
    overlap difference.
    """
    if g.planted is None:
        raise ValueError("noise study needs a planted coloring")
    q = p.arch.q
    rng = np.random.default_rng(seed)
    deg = degree_feature(g)[:, None]
    xi = one_hot(g.planted.colors, q)
    if fixed_point is None:
        x_init = one_hot(rng.integers(0, q, g.n_nodes), q)
        fixed_point = find_fixed_point(g, p, x_init, fp_max_iter, fp_tol).y
    x_fp = np.asarray(fixed_point, dtype=np.float64)
    h_xi = continuous_energy(g, xi)
    h_fp = continuous_energy(g, x_fp)

    def through(x, a, eps):
        return forward(g, np.concatenate([math.sqrt(a) * x + math.sqrt(1 - a) * eps, deg], axis=1), p)

    rows = []
    for a in alphas:
        a = float(a)
        vals = []
        for _ in range(n_samples):
            eps = rng.standard_normal(xi.shape)
            xt = through(xi, a, eps)
            ft = through(x_fp, a, eps)
            o_xi = overlap_term(xt, xi)
            o_fp = overlap_term(ft, x_fp)
            vals.append((continuous_energy(g, xt) - h_xi, continuous_energy(g, ft) - h_fp,
                         o_xi, o_fp, o_fp - o_xi))
        v = np.asarray(vals)
        mean = v.mean(0)
        std = v.std(0, ddof=1) if n_samples > 1 else np.zeros(5)
        row = {"alpha": a}
        for name, mu, sd in zip(("dh_planted", "dh_fp", "overlap_planted", "overlap_fp", "d_overlap"), mean, std):
            row[f"{name}_mean"] = float(mu)
            row[f"{name}_std"] = float(sd)
        rows.append(row)
    return rows


# -- throughput ---------------------------------------------------------------

def throughput_report(records) -> list[dict]:
    """Mean iterations per second per (n, c, method); cells without timing are omitted."""
    groups: dict = {}
    for r in records:
        if r.wall_seconds > 0:
            groups.setdefault((r.n, r.c, r.method), []).append(r.iterations / r.wall_seconds)
    return [
        {"n": n, "c": c, "method": m, "iterations_per_sec": float(np.mean(v))}
        for (n, c, m), v in sorted(groups.items())
    ]


# -- CSV ---------------------------------------------------------------------

def write_records(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(RECORD_FIELDS)
        for r in records:
            wr.writerow([r.method, r.kind, r.n, repr(r.c), r.q, r.iterations, r.seed,
                         repr(r.conflict_fraction), f"{r.wall_seconds:.6f}"])


def read_records(path) -> list[RunRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"unexpected record header {rd.fieldnames}")
        return [
            RunRecord(r["method"], r["kind"], int(r["n"]), float(r["c"]), int(r["q"]),
                      int(r["iterations"]), int(r["seed"]), float(r["conflict_fraction"]),
                      float(r["wall_seconds"]))
            for r in rd
        ]


def write_fits(fits, path) -> None:
    """``fits`` is a sequence of ``(c, FitResult)``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(FIT_FIELDS)
        for c, f in fits:
            values = (c, f.A, f.A_err, f.B, f.B_err, f.C, f.C_err, f.residual)
            wr.writerow([repr(float(v)) for v in values] + [int(f.converged)])


def read_fits(path) -> list[tuple[float, FitResult]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != FIT_FIELDS:
            raise ValueError(f"unexpected fit header {rd.fieldnames}")
        return [
            (float(r["c"]), FitResult(float(r["A"]), float(r["B"]), float(r["C"]), float(r["residual"]),
                                      float(r["A_err"]), float(r["B_err"]), float(r["C_err"]),
                                      converged=bool(int(r["converged"]))))
            for r in rd
        ]


def write_rows(rows, fields, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def read_rows(path) -> list[dict]:
    def conv(v):
        for t in (int, float):
            try:
                return t(v)
            except ValueError:
                pass
        return v

    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: conv(v) for k, v in r.items()} for r in csv.DictReader(fh)]
