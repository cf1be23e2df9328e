"""Command-line entry point: ``dagnet <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, DagnetError
from .features import FEATURE_NAMES, feature_matrix, structural_features
from .generators import (
    orient_to_dag,
    sample_ba,
    sample_er,
    sample_gil,
    sample_uniform_connected_dag,
    sample_uniform_dag,
    sample_ws,
)
from .graph import dumps_graph, loads_graph
from .nas.operators import OPERATORS, SpaceConstraints
from .nas.predictor import fit_predictor_features
from .nas.search import (
    SyntheticEvaluator,
    TrainedEvaluator,
    evolve,
    labeled_sampler,
    operator_study,
    theme_sampler,
    udag_sampler,
)
from .neural.checkpoint import load_network, save_network
from .neural.network import ACTIVATIONS, BuildSpec, build_network
from .neural.training import LOSSES, TrainScheme, evaluate, train
from .pruning import CRITERIA, GRANULARITIES, PruneConfig, run_schedule
from .reports import emit_report, read_csv, render_json
from .rng import make_rng
from .shapley import SOLVERS, load_game, solve
from .spheres import generate, load_dataset, save_dataset, split
from .themes import enumerate_cts

U64 = 1 << 64
# Flags that name files; they are excluded from recorded configs so reruns
# into another directory stay byte-identical. Input files are recorded by digest.
PATH_FLAGS = {"out", "report", "best", "graph", "graphs", "data", "net", "game", "records"}
RUNTIME_FLAGS = {"threads", "quiet", "func", "command"}


# -- helpers -----------------------------------------------------------------

def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _run_record(args, inputs: dict | None = None) -> dict:
    """Version, resolved config and seed of a run, independent of paths and thread count."""
    config = {
        k: v for k, v in sorted(vars(args).items()) if k not in PATH_FLAGS and k not in RUNTIME_FLAGS
    }
    config["eval"] = _strip_eval_path(config.get("eval"))
    if config["eval"] is None:
        del config["eval"]
    return {
        "version": __version__,
        "command": args.command,
        "config": config,
        "seed": args.seed,
        "inputs": {k: _digest(p) for k, p in sorted((inputs or {}).items())},
    }


def _strip_eval_path(spec):
    if isinstance(spec, str) and spec.startswith("spheres:"):
        return "spheres"
    return spec


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _parse_kv(text: str, what: str) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep or not key:
            raise ArgumentError(f"{what}: expected key=value pairs, got {part!r}")
        out[key.strip()] = value.strip()
    return out


def _parse_amount(text: str) -> tuple:
    kv = _parse_kv(text, "--amount")
    if len(kv) != 1:
        raise ArgumentError("--amount takes exactly one of k=N, p=F, bucket=F")
    (kind, value), = kv.items()
    try:
        return (kind, int(value)) if kind == "k" else (kind, float(value))
    except ValueError:
        raise ArgumentError(f"--amount: bad number {value!r}")


def _parse_stop(text: str) -> tuple:
    if text == "empty":
        return ("empty", 0)
    kv = _parse_kv(text, "--stop")
    if len(kv) != 1:
        raise ArgumentError("--stop takes exactly one of steps=N, sparsity=F, perf=F, bucket=F, empty")
    (kind, value), = kv.items()
    try:
        return (kind, int(value)) if kind == "steps" else (kind, float(value))
    except ValueError:
        raise ArgumentError(f"--stop: bad number {value!r}")


def _parse_fractions(text: str) -> tuple:
    try:
        fr = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ArgumentError(f"--split: bad fractions {text!r}")
    return fr


def _dataset_parts(args) -> tuple:
    ds = load_dataset(args.data)
    parts = split(ds, _parse_fractions(args.split), args.split_seed)
    return ds, dict(zip(("train", "val", "test"), parts))


def _subset(ds, parts, name: str):
    return ds if name == "all" else parts[name]


def _space_sampler(text: str, labeled: bool):
    kind, _, rest = text.partition(":")
    kv = _parse_kv(rest, "--space")
    try:
        if kind == "udag":
            base = udag_sampler(int(kv.get("n", 7)), bool(int(kv.get("connected", 1))))
        elif kind == "themes":
            base = theme_sampler(int(kv.get("order", 5)))
        else:
            raise ArgumentError(f"unknown space {kind!r}; use udag:n=.. or themes:order=..")
    except ValueError as exc:
        raise ArgumentError(f"--space: {exc}")
    if not labeled:
        return base, None
    constraints = SpaceConstraints()
    return labeled_sampler(base, constraints), constraints


def _evaluator(args) -> tuple:
    kind, _, rest = args.eval.partition(":")
    if kind == "synthetic":
        name, _, target = rest.partition("=")
        return SyntheticEvaluator(name or "density", float(target) if target else args.target), {}
    if kind == "spheres":
        if not rest:
            raise ArgumentError("--eval spheres:<dataset path>")
        ds = load_dataset(rest)
        tr, va, _ = split(ds, _parse_fractions(args.split), args.split_seed)
        spec = BuildSpec(ds.dim, ds.classes, args.scale, layer_norm=args.layer_norm)
        scheme = TrainScheme(args.lr, args.batch_size, args.epochs)
        ev = TrainedEvaluator((tr.points, tr.one_hot()), (va.points, va.labels), spec, scheme, args.realizations)
        return ev, {"eval": rest}
    raise ArgumentError(f"unknown evaluator {kind!r}; use spheres:<path> or synthetic:<name>")


# -- commands ----------------------------------------------------------------

def cmd_gen_data(args) -> None:
    bounds = [(args.lo, args.hi)] * args.dim
    ds = generate(args.dim, args.classes, args.n, (args.r_lo, args.r_hi), bounds, args.seed)
    save_dataset(ds, args.out)
    _say(args, f"wrote {len(ds)} samples, {len(ds.spheres)} spheres to {args.out}")


def cmd_sample_graph(args) -> None:
    rng = make_rng(args.seed)
    n = args.n
    if args.model == "udag":
        g = sample_uniform_dag(n, rng)
    elif args.model == "udag-connected":
        g = sample_uniform_connected_dag(n, rng, max_trials=args.max_trials)
    elif args.model == "gil":
        g = sample_gil(n, args.p, rng)
    elif args.model == "er":
        g = sample_er(n, args.m, rng)
    elif args.model == "ws":
        g = sample_ws(n, args.k, args.p, rng)
    else:
        g = sample_ba(n, args.m, rng)
    if args.orient and args.model not in ("udag", "udag-connected"):
        g = orient_to_dag(g, rng.permutation(n).tolist())
    _write_text(args.out, dumps_graph(g) + "\n")
    _say(args, f"wrote a graph with {g.order} vertices and {len(g.edges)} edges to {args.out}")


def cmd_enum_cts(args) -> None:
    themes = enumerate_cts(args.order)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(themes))))
    files = []
    for i, g in enumerate(themes):
        name = f"theme_{i:0{width}d}.json"
        _write_text(out / name, dumps_graph(g) + "\n")
        files.append(name)
    manifest = {"order": args.order, "count": len(themes), "files": files, "run": _run_record(args)}
    _write_text(out / "manifest.json", render_json(manifest))
    _say(args, f"wrote {len(themes)} themes of order {args.order} to {out}")


def cmd_build_net(args) -> None:
    g = loads_graph(Path(args.graph).read_text())
    inputs = {"graph": args.graph}
    if args.data:
        ds = load_dataset(args.data)
        input_dim, output_dim = ds.dim, ds.classes
        inputs["data"] = args.data
    elif args.input_dim and args.output_dim:
        input_dim, output_dim = args.input_dim, args.output_dim
    else:
        raise ArgumentError("give --data or both --input-dim and --output-dim")
    spec = BuildSpec(
        input_dim,
        output_dim,
        args.scale,
        proportion_concentration=args.concentration,
        activation=args.activation,
        init=args.init,
        init_a=args.init_a,
        init_b=args.init_b,
        layer_norm=args.layer_norm,
        classifier_softmax=not args.no_softmax,
        seed=args.seed,
    )
    net = build_network(g, spec)
    save_network(net, args.out, _run_record(args, inputs))
    _say(args, f"wrote a network with layer sizes {net.layer_sizes} to {args.out}")


def cmd_train(args) -> None:
    net = load_network(args.net)
    ds, parts = _dataset_parts(args)
    tr = parts["train"]
    scheme = TrainScheme(args.lr, args.batch_size, args.epochs, args.loss, args.seed)
    losses = train(net, tr.points, tr.one_hot(), scheme)
    save_network(net, args.out, _run_record(args, {"net": args.net, "data": args.data}))
    if args.report:
        emit_report([{"epoch": i + 1, "loss": v} for i, v in enumerate(losses)], "csv", args.report, ["epoch", "loss"])
    _say(args, f"trained {args.epochs} epochs, final loss {losses[-1]:.6g}")


def cmd_evaluate(args) -> None:
    net = load_network(args.net)
    ds, parts = _dataset_parts(args)
    sub = _subset(ds, parts, args.subset)
    m = evaluate(net, sub.points, sub.labels)
    doc = {"subset": args.subset, "metrics": m, "run": _run_record(args, {"net": args.net, "data": args.data})}
    text = render_json(doc)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_prune(args) -> None:
    net = load_network(args.net)
    ds, parts = _dataset_parts(args)
    tr = parts["train"]
    ev = _subset(ds, parts, args.eval_subset)
    config = PruneConfig(
        granularity=args.granularity,
        criterion=args.criterion,
        amount=_parse_amount(args.amount),
        scope=args.scope,
        stop=_parse_stop(args.stop),
        retrain_epochs=args.retrain_epochs,
        shapley_method=args.shapley_method,
        shapley_budget=args.budget,
        rewire=args.rewire,
    )
    scheme = TrainScheme(args.lr, args.batch_size, 1, seed=args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pruned, history = run_schedule(
            net, (tr.points, tr.one_hot()), (ev.points, ev.labels), config, scheme, make_rng(args.seed)
        )
    rows = [
        {"step": h.step, "sparsity": h.sparsity, "accuracy": h.accuracy, "f1_macro": h.f1_macro, "loss": h.loss}
        for h in history
    ]
    emit_report(rows, "csv", args.report, ["step", "sparsity", "accuracy", "f1_macro", "loss"])
    if args.out:
        save_network(pruned, args.out, _run_record(args, {"net": args.net, "data": args.data}))
    _say(args, f"{len(history) - 1} pruning steps, final sparsity {history[-1].sparsity:.4g}")


def cmd_shapley(args) -> None:
    game = load_game(args.game)
    res = solve(game, args.method, args.budget, make_rng(args.seed))
    doc = {str(p): v for p, v in res.values.items()}
    if "meta" in doc:
        raise ArgumentError("a player named 'meta' collides with the output schema")
    meta = {"method": res.method, "samples_used": res.samples_used, "payoff_evals": res.payoff_evals}
    meta.update({k: v for k, v in res.meta.items() if isinstance(v, (int, float, str, bool))})
    meta["run"] = _run_record(args, {"game": args.game})
    doc["meta"] = meta
    text = render_json(doc)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _record_row(r) -> dict:
    return {
        "generation": r.generation,
        "candidate": r.seed[2],
        "score": r.score,
        "order": r.graph.order,
        "size": r.graph.size,
        "graph": dumps_graph(r.graph),
    }


def cmd_evolve(args) -> None:
    sampler, constraints = _space_sampler(args.space, args.labeled)
    evaluator, inputs = _evaluator(args)
    mix = {k: float(v) for k, v in _parse_kv(args.ops, "--ops").items()}
    result = evolve(sampler, evaluator, args.pop, args.gens, args.survive, mix, constraints, args.seed, args.threads)
    rows = [_record_row(r) for r in result.history]
    emit_report(rows, "csv", args.report, ["generation", "candidate", "score", "order", "size", "graph"])
    if args.best:
        _write_text(args.best, dumps_graph(result.best.graph) + "\n")
    _say(args, f"best score {result.best.score:.6g} after {args.gens} generations")


def cmd_op_study(args) -> None:
    if args.op not in OPERATORS:
        raise ArgumentError(f"unknown operator {args.op!r}; choose from {sorted(OPERATORS)}")
    sampler, constraints = _space_sampler(args.space, args.labeled)
    evaluator, _ = _evaluator(args)
    rows = operator_study(args.op, sampler, evaluator, args.sources, args.targets, args.seed, constraints)
    cols = ["source", "target", "source_score", "target_score", "delta", "skipped"]
    emit_report([{c: getattr(r, c) for c in cols} for r in rows], "csv", args.report, cols)
    done = [r.delta for r in rows if not r.skipped]
    _say(args, f"{len(done)} applications, mean delta {np.mean(done) if done else float('nan'):.6g}")


def cmd_features(args) -> None:
    files = sorted(Path(args.graphs).glob("*.json"))
    graphs = []
    for f in files:
        if f.name == "manifest.json":
            continue
        graphs.append(loads_graph(f.read_text()))
    if not graphs:
        raise ArgumentError(f"no graph files in {args.graphs}")
    rows = [structural_features(g) for g in graphs]
    emit_report(rows, "csv", args.out, list(FEATURE_NAMES))
    _say(args, f"wrote features of {len(rows)} graphs to {args.out}")


def cmd_predict(args) -> None:
    records = read_csv(args.records)
    if not records:
        raise ArgumentError("no records")
    if args.target not in records[0]:
        raise ArgumentError(f"records lack the target column {args.target!r}")
    y = np.array([float(r[args.target]) for r in records])
    if "graph" in records[0]:
        X = feature_matrix([loads_graph(r["graph"]) for r in records])
    else:
        missing = [c for c in FEATURE_NAMES if c not in records[0]]
        if missing:
            raise ArgumentError(f"records need a graph column or all feature columns; missing {missing[:3]}...")
        X = np.array([[float(r[c]) for c in FEATURE_NAMES] for r in records])
    model, diag = fit_predictor_features(X, y, args.seed, args.test_fraction)
    doc = {"model": model.to_dict(), "diagnostics": diag, "run": _run_record(args, {"records": args.records})}
    _write_text(args.out, render_json(doc))
    _say(args, f"held-out R^2 {diag['r2']:.6g}, Spearman {diag['spearman']:.6g}")


# -- parser ------------------------------------------------------------------

def _global_flags(parser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=_u64, default=d(0), help="master seed (unsigned 64-bit)")
    parser.add_argument("--threads", type=_positive, default=d(1), help="worker threads for evaluations")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress messages")


def _split_flags(p) -> None:
    p.add_argument("--split", default="0.7,0.15,0.15", help="train,val,test fractions")
    p.add_argument("--split-seed", type=_u64, default=0)


def _search_flags(p) -> None:
    p.add_argument("--space", default="udag:n=7", help="udag:n=N[,connected=0|1] or themes:order=N")
    p.add_argument("--eval", default="synthetic:density", help="spheres:<dataset path> or synthetic:<name>[=target]")
    p.add_argument("--target", type=float, default=0.3, help="target for synthetic:density")
    p.add_argument("--labeled", action="store_true", help="enforce labeled-cell space constraints")
    p.add_argument("--scale", type=_positive, default=20)
    p.add_argument("--layer-norm", action="store_true")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=_positive, default=32)
    p.add_argument("--epochs", type=_positive, default=10)
    p.add_argument("--realizations", type=_positive, default=1)
    _split_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagnet", description="Graph-induced neural networks and graph search.")
    parser.add_argument("--version", action="version", version=f"dagnet {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("gen-data", cmd_gen_data, "generate a spheres classification dataset")
    p.add_argument("--dim", type=_positive, default=2)
    p.add_argument("--classes", type=_positive, default=4)
    p.add_argument("--n", type=_positive, default=2000)
    p.add_argument("--r-lo", type=float, default=10.0)
    p.add_argument("--r-hi", type=float, default=20.0)
    p.add_argument("--lo", type=float, default=-100.0)
    p.add_argument("--hi", type=float, default=100.0)
    p.add_argument("--out", required=True)

    p = add("sample-graph", cmd_sample_graph, "sample a random graph")
    p.add_argument("--model", required=True, choices=["udag", "udag-connected", "gil", "er", "ws", "ba"])
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--max-trials", type=_positive, default=1000)
    p.add_argument("--orient", action="store_true", help="orient undirected models along a random order")
    p.add_argument("--out", required=True)

    p = add("enum-cts", cmd_enum_cts, "enumerate computational themes of one order")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = add("build-net", cmd_build_net, "build a graph-induced network checkpoint")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", help="dataset whose dimensions set the input and output sizes")
    p.add_argument("--input-dim", type=_positive)
    p.add_argument("--output-dim", type=_positive)
    p.add_argument("--scale", type=_positive, default=100)
    p.add_argument("--concentration", type=float, default=100.0)
    p.add_argument("--activation", choices=list(ACTIVATIONS), default="relu")
    p.add_argument("--init", choices=["normal", "uniform"], default="normal")
    p.add_argument("--init-a", type=float, default=0.0)
    p.add_argument("--init-b", type=float, default=0.1)
    p.add_argument("--layer-norm", action="store_true")
    p.add_argument("--no-softmax", action="store_true")
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train a checkpoint on the training split")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=_positive, default=32)
    p.add_argument("--epochs", type=_positive, default=100)
    p.add_argument("--loss", choices=list(LOSSES), default="cross_entropy")
    _split_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="per-epoch loss CSV")

    p = add("evaluate", cmd_evaluate, "classification metrics of a checkpoint")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--subset", choices=["train", "val", "test", "all"], default="test")
    _split_flags(p)
    p.add_argument("--out")

    p = add("prune", cmd_prune, "run a pruning schedule")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--criterion", choices=list(CRITERIA), default="magnitude")
    p.add_argument("--granularity", choices=list(GRANULARITIES), default="weight")
    p.add_argument("--amount", default="k=1", help="k=N, p=F or bucket=F")
    p.add_argument("--scope", choices=["global", "layer"], default="global")
    p.add_argument("--stop", default="steps=1", help="steps=N, sparsity=F, perf=F, bucket=F or empty")
    p.add_argument("--rewire", action="store_true")
    p.add_argument("--retrain-epochs", type=int, default=0)
    p.add_argument("--shapley-method", choices=sorted(SOLVERS), default="exact")
    p.add_argument("--budget", type=_positive, default=1000)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=_positive, default=32)
    p.add_argument("--eval-subset", choices=["train", "val", "test", "all"], default="val")
    _split_flags(p)
    p.add_argument("--report", required=True)
    p.add_argument("--out", help="pruned checkpoint")

    p = add("shapley", cmd_shapley, "Shapley values of a game file")
    p.add_argument("--game", required=True)
    p.add_argument("--method", choices=sorted(SOLVERS), default="exact")
    p.add_argument("--budget", type=_positive, default=10000)
    p.add_argument("--out")

    p = add("evolve", cmd_evolve, "elitist evolutionary graph search")
    _search_flags(p)
    p.add_argument("--pop", type=_positive, default=20)
    p.add_argument("--gens", type=_positive, default=20)
    p.add_argument("--survive", type=float, default=0.25)
    p.add_argument("--ops", default="resample=0.2,relabel=0.2,rewire=0.2,contract=0.2,distract=0.2")
    p.add_argument("--report", required=True)
    p.add_argument("--best", help="graph JSON of the best candidate")

    p = add("op-study", cmd_op_study, "score changes under one variation operator")
    _search_flags(p)
    p.add_argument("--op", required=True)
    p.add_argument("--sources", type=_positive, default=100)
    p.add_argument("--targets", type=_positive, default=20)
    p.add_argument("--report", required=True)

    p = add("features", cmd_features, "structural features of a directory of graphs")
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", required=True)

    p = add("predict", cmd_predict, "fit a linear performance predictor")
    p.add_argument("--records", required=True, help="CSV with a graph column or feature columns")
    p.add_argument("--target", default="score")
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ArgumentError as exc:
        print(f"dagnet {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DagnetError, OSError, ValueError) as exc:
        print(f"dagnet {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
