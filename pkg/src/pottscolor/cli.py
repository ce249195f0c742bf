"""Command-line entry point: ``pottscolor <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime errors.
Each run prints its resolved configuration (including the seed) to stderr.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from pottscolor import __version__
from pottscolor.annealing import SaConfig, anneal
from pottscolor.annealing import write_trajectory as write_sa_trajectory
from pottscolor.coloring import ColorConfig, color
from pottscolor.coloring import write_trajectory as write_color_trajectory
from pottscolor.config import (
    ConfigError, build, check_keys, field_names, format_resolved, parse_list, read_config, resolve_seed,
)
from pottscolor.experiments import (
    DEFAULT_ITERATION_GRID, NOISE_FIELDS, fit_records, noise_study, read_records, sweep,
    throughput_report, write_fits, write_records, write_rows,
)
from pottscolor.graph import GraphError, generate_er, generate_planted, read_graph, write_graph
from pottscolor.model import (
    REFERENCE_PARAM_TABLE, REFERENCE_PARAM_TOTAL, ArchSpec, CheckpointError, count_params,
    load_checkpoint, save_checkpoint,
)
from pottscolor.potts import conflict_count
from pottscolor.training import TrainConfig, TrainingError, train, write_manifest, write_train_log


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_config(name: str, values: dict) -> None:
    print(f"# pottscolor {name} resolved config", file=sys.stderr)
    print(format_resolved(values), file=sys.stderr)


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


# -- subcommands -------------------------------------------------------------

def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed)
    _emit_config("generate", {"n": args.n, "c": args.c, "q": args.q, "kind": args.kind,
                              "count": args.count, "out_dir": args.out_dir, "seed": seed})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(args.count):
        gseed = seed + k
        if args.kind == "planted":
            g, planted = generate_planted(args.n, args.c, args.q, gseed)
            conflicts = conflict_count(g, planted.colors)
        else:
            g = generate_er(args.n, args.c, gseed)
            conflicts = None
        path = out_dir / f"graph_{k:04d}.txt"
        write_graph(g, path)
        paths.append(path)
        extra = "" if conflicts is None else f" planted_conflicts={conflicts}"
        print(f"{path} n={g.n_nodes} m={g.n_edges} seed={gseed}{extra}")
    write_manifest(paths, out_dir / "manifest.txt")
    return 0


_ARCH_KEYS = {"n_layers", "latent_dim", "mlp_hidden", "aggregation", "q"}
_DATA_KEYS = {"gen_count", "gen_n", "gen_c"}


def cmd_train(args) -> int:
    values = read_config(args.config) if args.config else {}
    values.update(_overrides(args.set))
    if args.epochs is not None:
        values["epochs"] = str(args.epochs)
    if args.manifest is not None:
        values["manifest"] = args.manifest
    check_keys(values, field_names(TrainConfig) | _ARCH_KEYS | _DATA_KEYS)
    seed = resolve_seed(int(values["seed"]) if "seed" in values else args.seed)
    cfg = build(TrainConfig, values, seed=seed)
    q = int(values.get("q", 5))
    arch_values = {k: v for k, v in values.items() if k in _ARCH_KEYS}
    arch = build(ArchSpec, arch_values, q=q, input_dim=q + 1)
    graphs = None
    if cfg.manifest is None:
        count = int(values.get("gen_count", 0))
        if count < 1:
            raise ConfigError("set 'manifest' or 'gen_count'/'gen_n'/'gen_c' to provide training graphs")
        n, c = int(values.get("gen_n", 200)), float(values.get("gen_c", 5.0))
        graphs = [generate_planted(n, c, q, seed * 100003 + k)[0] for k in range(count)]
    resolved = {**asdict(cfg), **{f"arch.{k}": v for k, v in asdict(arch).items()}}
    if graphs is not None:
        resolved.update({"gen_count": len(graphs), "gen_n": graphs[0].n_nodes,
                         "gen_c": values.get("gen_c", 5.0)})
    _emit_config("train", resolved)

    def progress(rows):
        if not args.quiet:
            print(" ".join(f"{r['split']}[{r['epoch']}] loss={r['loss']:.5f} h={r['h']:.5f}"
                           for r in rows), file=sys.stderr)

    res = train(cfg, arch, graphs, progress=progress)
    save_checkpoint(res.params, args.out_checkpoint)
    if args.log_csv:
        write_train_log(res.log, args.log_csv)
    last = res.last("val") or res.last("train")
    if last is not None:
        print(f"checkpoint={args.out_checkpoint} epochs={cfg.epochs} final_{last['split']}_h={last['h']:.6f}")
    else:
        print(f"checkpoint={args.out_checkpoint} epochs=0")
    return 0


def cmd_color(args) -> int:
    g = read_graph(args.graph)
    p = load_checkpoint(args.checkpoint)
    seed = resolve_seed(args.seed)
    cfg = ColorConfig(T=args.iters, alpha_min=args.alpha_min, alpha_max=args.alpha_max,
                      noise_enabled=not args.no_noise, seed=seed,
                      record_trajectory=args.trajectory_out is not None)
    _emit_config("color", {"graph": args.graph, "checkpoint": args.checkpoint, **asdict(cfg)})
    res = color(g, p, cfg)
    if args.trajectory_out:
        write_color_trajectory(res, args.trajectory_out)
    if args.out_colors:
        Path(args.out_colors).write_text(" ".join(map(str, res.colors.tolist())) + "\n", encoding="utf-8")
    print(f"conflicts={res.conflicts} edges={g.n_edges} fraction={res.conflicts / max(g.n_edges, 1):.6f}")
    return 0


def cmd_anneal(args) -> int:
    g = read_graph(args.graph)
    q = args.q or g.q or 5
    seed = resolve_seed(args.seed)
    cfg = SaConfig(n_sweeps=args.sweeps, beta_start=args.beta_start, beta_end=args.beta_end,
                   schedule=args.schedule, seed=seed, q=q, stop_at_zero=not args.full)
    _emit_config("anneal", {"graph": args.graph, **asdict(cfg)})
    res = anneal(g, cfg)
    if args.trajectory_out:
        write_sa_trajectory(res, args.trajectory_out)
    if args.out_colors:
        Path(args.out_colors).write_text(" ".join(map(str, res.colors.tolist())) + "\n", encoding="utf-8")
    print(f"conflicts={res.conflicts} edges={g.n_edges} fraction={res.conflicts / max(g.n_edges, 1):.6f} "
          f"sweeps={res.sweeps_run} unit={res.iteration_unit}")
    return 0


_SWEEP_KEYS = {
    "methods", "kinds", "n_values", "c_values", "iterations", "graphs_per_point", "q", "seed",
    "checkpoint", "beta_start", "beta_end", "schedule", "alpha_min", "alpha_max", "noise", "workers",
}


def cmd_sweep(args) -> int:
    values = read_config(args.config) if args.config else {}
    values.update(_overrides(args.set))
    check_keys(values, _SWEEP_KEYS)
    seed = resolve_seed(int(values["seed"]) if "seed" in values else args.seed)
    methods = parse_list(values.get("methods", "gnn,sa"))
    kinds = parse_list(values.get("kinds", "planted"))
    n_values = [int(v) for v in parse_list(values.get("n_values", "200"))]
    c_values = [float(v) for v in parse_list(values.get("c_values", "5.0"))]
    iterations = [int(v) for v in parse_list(values.get("iterations", ",".join(map(str, DEFAULT_ITERATION_GRID))))]
    per_point = int(values.get("graphs_per_point", 10))
    q = int(values.get("q", 5))
    workers = args.workers if args.workers is not None else int(values.get("workers", 1))
    params = None
    if "gnn" in methods:
        if "checkpoint" not in values:
            raise ConfigError("method 'gnn' needs 'checkpoint' in the sweep config")
        params = load_checkpoint(values["checkpoint"])
    sa_cfg = build(SaConfig, {k: values[k] for k in ("beta_start", "beta_end", "schedule") if k in values}, q=q)
    col_cfg = ColorConfig(alpha_min=float(values.get("alpha_min", 0.4)),
                          alpha_max=float(values.get("alpha_max", 0.9)),
                          noise_enabled=values.get("noise", "true").lower() in ("1", "true", "yes", "on"))
    _emit_config("sweep", {
        "methods": methods, "kinds": kinds, "n_values": n_values, "c_values": c_values,
        "iterations": iterations, "graphs_per_point": per_point, "q": q, "seed": seed,
        "checkpoint": values.get("checkpoint", ""), "beta_start": sa_cfg.beta_start,
        "beta_end": sa_cfg.beta_end, "schedule": sa_cfg.schedule, "alpha_min": col_cfg.alpha_min,
        "alpha_max": col_cfg.alpha_max, "noise": col_cfg.noise_enabled, "workers": workers,
        "iteration_unit_sa": "sweep",
    })
    records = sweep(methods, kinds, n_values, c_values, iterations, per_point, seed, q,
                    params, sa_cfg, col_cfg, workers)
    write_records(records, args.out_csv)
    if args.throughput_csv:
        write_rows(throughput_report(records), ("n", "c", "method", "iterations_per_sec"), args.throughput_csv)
    if args.plot:
        from pottscolor.experiments import aggregate
        from pottscolor.plotting import Series, plot

        groups: dict = {}
        for row in aggregate(records):
            groups.setdefault(f"{row['method']} {row['kind']} n={row['n']} c={row['c']}", []).append(row)
        series = [Series(k, [r["iterations"] for r in v], [r["mean"] for r in v], [r["std"] for r in v])
                  for k, v in groups.items()]
        plot(series, "scaling", args.plot)
    print(f"records={len(records)} out={args.out_csv}")
    return 0


def cmd_fit(args) -> int:
    records = read_records(args.in_csv)
    if args.method:
        records = [r for r in records if r.method == args.method]
    if args.kind:
        records = [r for r in records if r.kind == args.kind]
    if args.n is not None:
        records = [r for r in records if r.n == args.n]
    if not records:
        raise ValueError("no records left after filtering")
    groups = {(r.method, r.kind, r.n) for r in records}
    if len(groups) > 1:
        raise UsageError(
            "input mixes several (method, kind, n) groups; select one with --method/--kind/--n: "
            + ", ".join(f"{m}/{k}/{n}" for m, k, n in sorted(groups))
        )
    seed = resolve_seed(args.seed)
    _emit_config("fit", {"in_csv": args.in_csv, "out_csv": args.out_csv, "group": sorted(groups)[0],
                         "bootstrap": args.bootstrap, "seed": seed})
    fits = fit_records(records, args.bootstrap, seed)
    write_fits([(key[3], f) for key, f in fits], args.out_csv)
    for key, f in fits:
        print(f"c={key[3]} A={f.A:.6g} B={f.B:.6g} C={f.C:.6g} converged={f.converged}")
    if args.plot:
        from pottscolor.plotting import Series, plot

        cs = [key[3] for key, _ in fits]
        series = [Series(name, cs, [getattr(f, name) for _, f in fits], [getattr(f, f"{name}_err") for _, f in fits])
                  for name in ("A", "B", "C")]
        plot(series, "fitparams", args.plot)
    return 0


def cmd_noise_study(args) -> int:
    g = read_graph(args.graph)
    p = load_checkpoint(args.checkpoint)
    alphas = [float(a) for a in parse_list(args.alphas)]
    seed = resolve_seed(args.seed)
    _emit_config("noise-study", {"graph": args.graph, "checkpoint": args.checkpoint,
                                 "alphas": alphas, "samples": args.samples, "seed": seed})
    rows = noise_study(g, p, alphas, args.samples, seed)
    write_rows(rows, NOISE_FIELDS, args.out_csv)
    if args.plot:
        from pottscolor.plotting import Series, plot

        series = [Series(name, alphas, [r[f"{name}_mean"] for r in rows], [r[f"{name}_std"] for r in rows])
                  for name in ("dh_planted", "dh_fp", "d_overlap")]
        plot(series, "noise", args.plot)
    print(f"rows={len(rows)} out={args.out_csv}")
    return 0


def cmd_info(args) -> int:
    p = load_checkpoint(args.checkpoint)
    _emit_config("info", {"checkpoint": args.checkpoint})
    a = p.arch
    print(f"n_layers = {a.n_layers}")
    print(f"latent_dim = {a.latent_dim}")
    print(f"q = {a.q}")
    print(f"input_dim = {a.input_dim}")
    print(f"mlp_hidden = {','.join(map(str, a.mlp_hidden))}")
    print(f"aggregation = {a.aggregation}")
    print(f"seed = {p.seed}")
    rows, total = count_params(p)
    print(f"{'Layer':<10} {'Parameters':>10}")
    for name, count in rows:
        print(f"{name:<10} {count:>10}")
    print(f"{'Total':<10} {total:>10}")
    if args.reference:
        print(f"# reference table (published model): total {REFERENCE_PARAM_TOTAL}")
        for name, count in REFERENCE_PARAM_TABLE.items():
            print(f"# {name:<10} {count:>10}")
    return 0


# shared help text for options that appear in several subcommands
_HELP = {
    "seed": "random seed (falls back to POTTSCOLOR_SEED, then 0)",
    "graph": "graph file (header 'N M q', optional color line, edge list)",
    "checkpoint": "model checkpoint file",
    "out_csv": "output CSV path",
    "in_csv": "input CSV of run records",
    "config": "key = value config file",
    "set": "override a config key (repeatable)",
    "kind": "graph family",
    "count": "number of graphs to write",
    "out_dir": "output folder",
    "iters": "number of noisy iterations",
    "alpha_min": "first mixing weight of the schedule",
    "alpha_max": "last mixing weight of the schedule",
    "no_noise": "skip the corruption step",
    "out_colors": "write the final coloring here",
    "sweeps": "number of sweeps (N proposals each)",
    "beta_start": "initial inverse temperature",
    "beta_end": "final inverse temperature",
    "schedule": "inverse-temperature schedule",
    "workers": "parallel worker processes (default: config value or 1)",
    "alphas": "comma-separated mixing weights",
    "samples": "noise draws per mixing weight",
    "plot": "SVG output path",
    "epochs": "override the number of epochs",
    "log_csv": "per-epoch training log CSV",
    "out_checkpoint": "where to write the trained checkpoint",
    "quiet": "suppress per-epoch progress",
    "throughput_csv": "iterations-per-second table",
    "method": "keep only this method",
    "n": "keep only this graph size",
}


def _fill_help(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if action.help is None and action.dest in _HELP:
            action.help = _HELP[action.dest]


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="pottscolor", description="Graph coloring with a noise-scheduled GNN and an SA baseline.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("generate", help="write random or quiet-planted graphs", formatter_class=fmt)
    s.add_argument("--n", type=int, default=200, help="number of nodes")
    s.add_argument("--c", type=float, default=5.0, help="mean connectivity")
    s.add_argument("--q", type=int, default=5, help="number of planted colors")
    s.add_argument("--kind", choices=("planted", "er"), default="planted")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--seed", type=int, default=None, help="base seed (graph k uses seed + k); env POTTSCOLOR_SEED")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("train", help="train the network on planted graphs", formatter_class=fmt)
    s.add_argument("--config", default=None, help="key = value config file")
    s.add_argument("--out-checkpoint", required=True)
    s.add_argument("--manifest", default=None, help="text file listing training graph paths")
    s.add_argument("--epochs", type=int, default=None)
    s.add_argument("--log-csv", default=None)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("color", help="color a graph with a trained checkpoint", formatter_class=fmt)
    s.add_argument("--graph", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--iters", type=int, default=500)
    s.add_argument("--alpha-min", type=float, default=0.4)
    s.add_argument("--alpha-max", type=float, default=0.9)
    s.add_argument("--no-noise", action="store_true")
    s.add_argument("--trajectory-out", default=None, help="CSV t,alpha,h_soft,conflicts_hard")
    s.add_argument("--out-colors", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_color)

    s = sub.add_parser("anneal", help="simulated-annealing baseline", formatter_class=fmt)
    s.add_argument("--graph", required=True)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--beta-start", type=float, default=0.5)
    s.add_argument("--beta-end", type=float, default=20.0)
    s.add_argument("--schedule", choices=("geometric", "linear"), default="geometric")
    s.add_argument("--q", type=int, default=None, help="colors (default: graph's planted q, else 5)")
    s.add_argument("--full", action="store_true", help="run all sweeps even after reaching zero conflicts")
    s.add_argument("--trajectory-out", default=None, help="CSV sweep,beta,conflicts,best_conflicts")
    s.add_argument("--out-colors", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_anneal)

    s = sub.add_parser("sweep", help="iteration-scaling sweep over methods and graphs", formatter_class=fmt)
    s.add_argument("--config", default=None)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--throughput-csv", default=None)
    s.add_argument("--plot", default=None, help="SVG path for a scaling plot")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", help="fit A*x^-B + C to sweep records", formatter_class=fmt)
    s.add_argument("--in-csv", required=True)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--method", choices=("gnn", "sa"), default=None)
    s.add_argument("--kind", choices=("planted", "random"), default=None)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--bootstrap", type=int, default=200, help="residual-bootstrap resamples")
    s.add_argument("--plot", default=None, help="SVG path for a fit-parameter plot")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("noise-study", help="energy/overlap response to corruption", formatter_class=fmt)
    s.add_argument("--graph", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--plot", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_noise_study)

    s = sub.add_parser("info", help="architecture and parameter table of a checkpoint", formatter_class=fmt)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--reference", action="store_true", help="also print the published parameter table")
    s.set_defaults(func=cmd_info)
    for sp in sub.choices.values():
        _fill_help(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GraphError, CheckpointError, TrainingError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
