"""``deepmne`` command line: diffuse, embed, evaluate.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .diffusion import rwr, save_diffusion, transition_matrix
from .evaluation import kfold_cv
from .graph_io import (GraphFormatError, NodeIndex, adjacency, build_node_index,
                       labeled_nodes, load_edge_list, load_labels)
from .neural import TrainingDivergedError
from .pipeline import ConfigError, PipelineConfig, read_embedding_tsv, run_deepmne, write_outputs

log = logging.getLogger("deepmne")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


def _configure_logging():
    raw = os.environ.get("DEEPMNE_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(raw, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if raw not in LOG_LEVELS:
        log.warning("ignoring DEEPMNE_LOG=%r; expected one of %s", raw, sorted(LOG_LEVELS))


def _thread_cap(n):
    if n is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.info("threadpoolctl not installed; --threads has no effect")
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def _run_dir(path, force):
    out = Path(path)
    if out.exists() and (not out.is_dir() or any(out.iterdir())) and not force:
        raise UsageError(f"output directory {out} exists and is not empty (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_files(paths):
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"input file not found: {p}")


def _network_names(paths):
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    return [f"{k}_{s}" for k, s in enumerate(stems)]


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_graphs(paths):
    index = build_node_index(paths)
    return index, [load_edge_list(p, index) for p in paths]


def cmd_diffuse(args):
    _require_files(args.edges)
    if not 0.0 < args.alpha <= 1.0:
        raise UsageError(f"--alpha must be in (0, 1], got {args.alpha}")
    if args.tol <= 0 or args.max_iter < 1:
        raise UsageError("--tol must be positive and --max-iter >= 1")
    index, graphs = _load_graphs(args.edges)
    out = _run_dir(args.out, args.force)
    networks = []
    for name, path, g in zip(_network_names(args.edges), args.edges, graphs):
        start = time.perf_counter()
        T, _ = transition_matrix(adjacency(g))
        dm = rwr(T, args.alpha, args.tol, args.max_iter)
        save_diffusion(dm, out / f"{name}.dmne")
        networks.append({"edges": str(path), "file": f"{name}.dmne", "iterations": dm.iterations_used,
                         "residual": dm.residual, "converged": dm.converged,
                         "isolated": sorted(dm.isolated), "seconds": time.perf_counter() - start})
    (out / "nodes.txt").write_text("".join(f"{name}\n" for name in index.names), encoding="utf-8")
    _write_json(out / "manifest.json", {"command": "diffuse", "alpha": args.alpha, "tol": args.tol,
                                        "max_iter": args.max_iter, "n_nodes": len(index),
                                        "networks": networks})
    print(f"wrote {len(networks)} diffusion matrices to {out}")
    return 0


def _load_embed_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    raw = dict(raw)
    edges = raw.pop("edges", None)
    if edges is not None:
        if not isinstance(edges, list) or not all(isinstance(e, str) for e in edges):
            raise ConfigError("/edges", "must be a list of file paths")
        base = Path(path).parent
        edges = [str(base / e) if not Path(e).is_absolute() else e for e in edges]
    return PipelineConfig.from_dict(raw), edges


def cmd_embed(args):
    config, edges = _load_embed_config(args.config)
    if args.edges:
        edges = args.edges
    if not edges:
        raise UsageError("no edge lists given (config 'edges' or --edges)")
    _require_files(edges)
    if args.seed is not None:
        config = replace(config, train=replace(config.train, seed=args.seed))
    index, graphs = _load_graphs(edges)
    out = _run_dir(args.out, args.force)
    result = run_deepmne(graphs, config)
    names = _network_names(edges)
    result.provenance["edges"] = [str(e) for e in edges]
    write_outputs(result, out, names)
    _write_json(out / "config.json", dict(config.to_dict(), edges=[str(Path(e).resolve()) for e in edges]))
    print(f"wrote embeddings for {len(index)} nodes x {len(graphs)} networks to {out}")
    return 0


def cmd_evaluate(args):
    if args.folds < 2:
        raise UsageError(f"--folds must be >= 2, got {args.folds}")
    _require_files([args.embeddings, args.labels])
    names, X = read_embedding_tsv(args.embeddings)
    annotated = labeled_nodes(args.labels)
    offenders = [n for n in names if n not in annotated]
    if offenders:
        raise UsageError(f"{len(offenders)} embedding node(s) missing from {args.labels}; first: {offenders[:5]}")
    index = NodeIndex.from_names(names)
    X = X[np.argsort(names, kind="stable")] if list(index.names) != names else X
    labels = load_labels(args.labels, index, skip_unknown=True)
    if args.folds > len(index):
        raise UsageError(f"--folds {args.folds} exceeds the {len(index)} nodes")
    report = kfold_cv(X, labels.assign, k=args.folds, seed=args.seed, epochs=args.epochs, lr=args.lr)
    payload = report.to_dict()
    payload["labels"] = list(labels.labels)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        out = _run_dir(args.out, args.force)
        (out / "metrics.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="deepmne", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diffuse", help="random walk with restart per network")
    p.add_argument("--edges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_diffuse)

    p = sub.add_parser("embed", help="learn multi-network node embeddings")
    p.add_argument("--config", required=True)
    p.add_argument("--edges", nargs="+", metavar="FILE", help="overrides the config's edge lists")
    p.add_argument("--seed", type=int, default=None, help="overrides train.seed")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="k-fold multi-label classification on embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("deepmne: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        with _thread_cap(args.threads):
            return args.func(args)
    except (UsageError, ConfigError, GraphFormatError) as exc:
        print(f"deepmne {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"deepmne {args.command}: training failed: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"deepmne {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
