"""End-to-end multi-network embedding.

Every network is diffused (or used raw), compressed by a plain autoencoder,
and then pushed through further semi-supervised layers. Before each
semi-supervised layer, network ``k`` receives the intersection of the
constraints the *other* networks extracted at the previous level.

Two schedules are supported:

``descend`` (default)
    iteration ``t`` trains layer ``t + 1``; with ``T`` iterations the first
    ``T`` layers after the initial one use constraints, the remaining ones
    are plain autoencoders.
``repeat``
    every layer after the initial one is retrained ``T`` times, each round
    consuming the constraints extracted in the previous round.

With ``T = 0`` both reduce to independently stacked plain autoencoders.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .constraints import (ConstraintList, constraint_drift, extract_fraction,
                          extract_threshold, merge_constraints)
from .diffusion import node_features, rwr, transition_matrix
from .graph_io import NodeIndex, WeightedGraph, adjacency
from .neural import TrainConfig, train_autoencoder, train_semi_ae

log = logging.getLogger(__name__)

STRATEGIES = ("topk", "threshold")
SCHEDULES = ("descend", "repeat")


class ConfigError(ValueError):
    """Invalid configuration value; ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


@dataclass(frozen=True)
class PipelineConfig:
    layer_dims: tuple
    iterations_T: int | None = None
    constraint_fraction_P: float = 0.001
    rwr_alpha: float = 0.5
    skip_rwr: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    strategy: str = "topk"
    f1: float = 0.95
    f2: float = -0.5
    schedule: str = "descend"
    rwr_tol: float = 1e-8
    rwr_max_iter: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(self.layer_dims))
        dims = self.layer_dims
        if len(dims) < 2:
            raise ConfigError("/layer_dims", "need at least an input and one hidden dimension")
        for i, d in enumerate(dims):
            if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
                raise ConfigError(f"/layer_dims/{i}", f"must be a positive integer, got {d!r}")
        for i in range(1, len(dims)):
            if dims[i] >= dims[i - 1]:
                raise ConfigError(f"/layer_dims/{i}", f"dimensions must strictly decrease ({dims[i - 1]} -> {dims[i]})")
        if self.schedule not in SCHEDULES:
            raise ConfigError("/schedule", f"must be one of {SCHEDULES}")
        if self.iterations_T is not None:
            if isinstance(self.iterations_T, bool) or not isinstance(self.iterations_T, (int, np.integer)) \
                    or self.iterations_T < 0:
                raise ConfigError("/iterations_T", "must be a non-negative integer")
            if self.schedule == "descend" and self.iterations_T > len(dims) - 2:
                raise ConfigError("/iterations_T",
                                  f"descend schedule allows at most {len(dims) - 2} iterations for {len(dims)} layer sizes")
        if not 0.0 <= self.constraint_fraction_P < 1.0:
            raise ConfigError("/constraint_fraction_P", "must be in [0, 1)")
        if not 0.0 < self.rwr_alpha <= 1.0:
            raise ConfigError("/rwr_alpha", "must be in (0, 1]")
        if not self.rwr_tol > 0:
            raise ConfigError("/rwr_tol", "must be positive")
        if self.rwr_max_iter < 1:
            raise ConfigError("/rwr_max_iter", "must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError("/strategy", f"must be one of {STRATEGIES}")
        if not self.f2 < self.f1:
            raise ConfigError("/f2", "cannot-link threshold f2 must be below f1")

    @property
    def iterations(self):
        if self.iterations_T is not None:
            return self.iterations_T
        return len(self.layer_dims) - 2 if self.schedule == "descend" else 1

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["layer_dims"] = [int(d) for d in self.layer_dims]
        out["train"] = self.train.to_dict()
        return out

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"/{unknown[0]}", "unknown field")
        if "layer_dims" not in d:
            raise ConfigError("/layer_dims", "required field missing")
        if not isinstance(d["layer_dims"], list):
            raise ConfigError("/layer_dims", "must be a list of integers")
        kwargs = dict(d)
        train = kwargs.pop("train", {})
        if not isinstance(train, dict):
            raise ConfigError("/train", "must be an object")
        try:
            kwargs["train"] = TrainConfig.from_dict(train)
        except (TypeError, ValueError) as exc:
            raise ConfigError("/train", str(exc)) from None
        for name, typ in (("constraint_fraction_P", float), ("rwr_alpha", float), ("f1", float),
                          ("f2", float), ("rwr_tol", float)):
            if name in kwargs and (isinstance(kwargs[name], bool) or not isinstance(kwargs[name], (int, float))):
                raise ConfigError(f"/{name}", "must be a number")
        if "skip_rwr" in kwargs and not isinstance(kwargs["skip_rwr"], bool):
            raise ConfigError("/skip_rwr", "must be true or false")
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class EmbeddingSet:
    index: NodeIndex
    per_network: list
    combined: np.ndarray
    provenance: dict = field(default_factory=dict)


def combine(per_network):
    """Concatenate per-network embeddings column-wise, in network order."""
    mats = [np.asarray(m, dtype=float) for m in per_network]
    if not mats:
        raise ValueError("nothing to combine")
    rows = {m.shape[0] for m in mats}
    if len(rows) != 1:
        raise ValueError(f"row counts differ across networks: {sorted(rows)}")
    return np.hstack(mats)


def level_seed(seed, level):
    """Sub-seed for one layer level; shared by all networks at that level."""
    return int(np.random.SeedSequence([int(seed), int(level)]).generate_state(1, dtype=np.uint32)[0])


def network_features(graph: WeightedGraph, config: PipelineConfig):
    """Input matrix (rows are nodes) for one network, plus RWR diagnostics."""
    A = adjacency(graph)
    if config.skip_rwr:
        return A, None
    T, _ = transition_matrix(A)
    dm = rwr(T, config.rwr_alpha, config.rwr_tol, config.rwr_max_iter)
    info = {"iterations": dm.iterations_used, "residual": dm.residual,
            "converged": dm.converged, "isolated": len(dm.isolated)}
    return node_features(dm), info


class _Run:
    def __init__(self, config: PipelineConfig, n: int):
        self.config = config
        self.n = n
        self.losses = []
        self.trace = []
        self.timings = {}

    def train_cfg(self, level):
        return replace(self.config.train, seed=level_seed(self.config.train.seed, level))

    def extract(self, H, level) -> ConstraintList:
        cfg = self.config
        seed = level_seed(cfg.train.seed, 10_000 + level)
        if cfg.strategy == "topk":
            return extract_fraction(H, cfg.constraint_fraction_P, seed=seed)
        return extract_threshold(H, cfg.f1, cfg.f2, seed=seed)

    def train(self, X, k, level, iteration, constraints):
        cfg = self.train_cfg(level)
        dim = self.config.layer_dims[level]
        if constraints is None:
            res = train_autoencoder(X, dim, cfg)
        else:
            res = train_semi_ae(X, constraints.to_matrices(self.n), dim, cfg)
        self.losses.append({"level": level, "iteration": iteration, "network": k,
                            "semi": constraints is not None, "losses": res.losses})
        return res.H

    def exchange(self, H_prev, cons, level, iteration):
        """One iteration over all networks: merge foreign constraints, train, extract."""
        K = len(H_prev)
        merged = [merge_constraints([cons[j] for j in range(K) if j != k]) for k in range(K)]
        H_new = [self.train(H_prev[k], k, level, iteration, merged[k]) for k in range(K)]
        new_cons = [self.extract(H_new[k], level) for k in range(K)]
        for k in range(K):
            self.trace.append({
                "level": level, "iteration": iteration, "network": k,
                "merged_must": len(merged[k].must), "merged_cannot": len(merged[k].cannot),
                "conflicts": len(merged[k].conflicts),
                "extracted_must": len(new_cons[k].must), "extracted_cannot": len(new_cons[k].cannot),
                "drift": constraint_drift(cons[k], new_cons[k]),
            })
        return H_new, new_cons


def _timed(timings, name, start):
    timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def run_deepmne(graphs, config: PipelineConfig) -> EmbeddingSet:
    """Embed ``K >= 2`` aligned networks; see the module docstring for the schedule."""
    graphs = list(graphs)
    if len(graphs) < 2:
        raise ValueError(f"need at least 2 networks, got {len(graphs)}")
    index = graphs[0].index
    if any(g.index != index for g in graphs[1:]):
        raise ValueError("all networks must share one node index")
    n = len(index)
    if n < 2:
        raise ValueError(f"networks need at least 2 nodes, got {n}")
    if config.layer_dims[0] != n:
        raise ConfigError("/layer_dims/0", f"input dimension must equal the node count {n}, got {config.layer_dims[0]}")

    run = _Run(config, n)
    K = len(graphs)
    dims = config.layer_dims
    T = config.iterations

    t0 = time.perf_counter()
    features, rwr_info = zip(*(network_features(g, config) for g in graphs))
    _timed(run.timings, "diffusion", t0)

    t0 = time.perf_counter()
    H = [run.train(features[k], k, 1, 0, None) for k in range(K)]
    _timed(run.timings, "initial_autoencoder", t0)

    cons = None
    if T > 0 and len(dims) > 2:
        t0 = time.perf_counter()
        cons = [run.extract(H[k], 1) for k in range(K)]
        _timed(run.timings, "constraint_extraction", t0)

    t0 = time.perf_counter()
    if config.schedule == "descend":
        for level in range(2, len(dims)):
            iteration = level - 1
            if iteration <= T:
                H, cons = run.exchange(H, cons, level, iteration)
            else:
                H = [run.train(H[k], k, level, 0, None) for k in range(K)]
    else:
        for level in range(2, len(dims)):
            if T == 0:
                H = [run.train(H[k], k, level, 0, None) for k in range(K)]
                continue
            H_in = H
            for iteration in range(1, T + 1):
                H, cons = run.exchange(H_in, cons, level, iteration)
    _timed(run.timings, "stacked_layers", t0)

    provenance = {
        "config": config.to_dict(),
        "n_nodes": n,
        "n_networks": K,
        "iterations": T,
        "rwr": list(rwr_info),
        "losses": run.losses,
        "constraint_trace": run.trace,
        "timings": run.timings,
    }
    return EmbeddingSet(index, list(H), combine(H), provenance)


def write_embedding_tsv(matrix, index: NodeIndex, path):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] != len(index):
        raise ValueError(f"{matrix.shape[0]} rows but index has {len(index)} nodes")
    with open(path, "w", encoding="utf-8") as fh:
        for name, row in zip(index.names, matrix):
            fh.write(name + "\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def read_embedding_tsv(path):
    """Return ``(node_ids, matrix)`` from an embedding TSV."""
    names, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric embedding value") from None
            names.append(parts[0])
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"{path}: rows have differing widths {sorted(widths)}")
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicate node ids")
    return names, np.array(rows, dtype=float).reshape(len(rows), widths.pop() if widths else 0)


def write_outputs(result: EmbeddingSet, out_dir, network_names=None):
    """Write one TSV per network, ``combined.tsv`` and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(network_names) if network_names else [f"network_{k}" for k in range(len(result.per_network))]
    files = []
    for name, H in zip(names, result.per_network):
        write_embedding_tsv(H, result.index, out / f"{name}.tsv")
        files.append(f"{name}.tsv")
    write_embedding_tsv(result.combined, result.index, out / "combined.tsv")
    manifest = dict(result.provenance, outputs=files + ["combined.tsv"], networks=names)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return out
