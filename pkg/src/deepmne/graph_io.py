"""Edge-list and label-file parsing over a shared node index.

All K networks of a multi-network dataset are aligned onto one
:class:`NodeIndex`. A node missing from one network simply becomes an
isolated row of that network's adjacency matrix.

File formats
------------
Edge list::

    # comment
    node_a<TAB>node_b[<TAB>weight]

Label file::

    node<TAB>label1,label2,...
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Malformed or inconsistent input file."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        loc = self.path if lineno is None else f"{self.path}:{lineno}"
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True)
class NodeIndex:
    """Ordered node identifiers and their inverse lookup."""

    names: tuple[str, ...]
    position: dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "NodeIndex":
        ordered = tuple(sorted(set(names)))
        return cls(ordered, {name: i for i, name in enumerate(ordered)})

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.position

    def __getitem__(self, name: str) -> int:
        return self.position[name]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph; edges are stored as ``(i, j, w)`` with ``i < j``."""

    index: NodeIndex
    edges: tuple[tuple[int, int, float], ...]

    @property
    def n(self) -> int:
        return len(self.index)

    @classmethod
    def from_adjacency(cls, A, index: NodeIndex) -> "WeightedGraph":
        """Build a graph from the upper triangle of a symmetric matrix."""
        A = np.asarray(A, dtype=float)
        if A.shape != (len(index), len(index)):
            raise ValueError(f"adjacency shape {A.shape} does not match index of size {len(index)}")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        rows, cols = np.nonzero(np.triu(A, k=1))
        w = A[rows, cols]
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("edge weights must lie in (0, 1]")
        edges = tuple((int(i), int(j), float(x)) for i, j, x in zip(rows, cols, w))
        return cls(index, edges)


@dataclass(frozen=True)
class LabelMatrix:
    """Binary node-by-label assignment."""

    index: NodeIndex
    labels: tuple[str, ...]
    assign: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        return (self.index == other.index and self.labels == other.labels
                and np.array_equal(self.assign, other.assign))

    __hash__ = None


def _records(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(lineno, fields)`` for every non-blank, non-comment line."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(path, None, f"cannot read file ({exc.strerror})") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _edge_fields(path, lineno, fields):
    if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
        raise GraphFormatError(path, lineno, "expected 'node_a<TAB>node_b[<TAB>weight]'")
    a, b = fields[0], fields[1]
    if len(fields) == 2:
        return a, b, 1.0
    try:
        w = float(fields[2])
    except ValueError:
        raise GraphFormatError(path, lineno, f"weight {fields[2]!r} is not a number") from None
    return a, b, w


def build_node_index(edge_list_paths: Sequence[str | os.PathLike]) -> NodeIndex:
    """Union of node identifiers over all edge lists, sorted lexicographically."""
    names = set()
    for path in edge_list_paths:
        for lineno, fields in _records(path):
            a, b, _ = _edge_fields(path, lineno, fields)
            names.add(a)
            names.add(b)
    return NodeIndex.from_names(names)


def load_edge_list(path, index: NodeIndex) -> WeightedGraph:
    """Parse one edge list against ``index``.

    Raises
    ------
    GraphFormatError
        On unknown nodes, weights outside (0, 1], self-loops or a pair
        listed twice (in either orientation).
    """
    seen = {}
    for lineno, fields in _records(path):
        a, b, w = _edge_fields(path, lineno, fields)
        for name in (a, b):
            if name not in index:
                raise GraphFormatError(path, lineno, f"unknown node {name!r}")
        if a == b:
            raise GraphFormatError(path, lineno, f"self-loop on {a!r}")
        if not (0.0 < w <= 1.0):
            raise GraphFormatError(path, lineno, f"weight {w!r} outside (0, 1]")
        i, j = sorted((index[a], index[b]))
        if (i, j) in seen:
            raise GraphFormatError(
                path, lineno, f"duplicate edge {a!r}-{b!r} (first seen on line {seen[(i, j)][1]})")
        seen[(i, j)] = (w, lineno)
    edges = tuple((i, j, w) for (i, j), (w, _) in sorted(seen.items()))
    return WeightedGraph(index, edges)


def write_edge_list(graph: WeightedGraph, path) -> None:
    """Write the canonical form: sorted by ``(i, j)``, 17 significant digits."""
    names = graph.index.names
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in sorted(graph.edges):
            fh.write(f"{names[i]}\t{names[j]}\t{w:.17g}\n")


def adjacency(graph: WeightedGraph) -> np.ndarray:
    n = graph.n
    A = np.zeros((n, n))
    if graph.edges:
        i, j, w = (np.array(col) for col in zip(*graph.edges))
        i = i.astype(np.intp)
        j = j.astype(np.intp)
        A[i, j] = w
        A[j, i] = w
    return A


def load_labels(path, index: NodeIndex, skip_unknown=False) -> LabelMatrix:
    """Parse a label file; nodes absent from the file get all-zero rows.

    Lines naming nodes outside ``index`` are an error unless ``skip_unknown``.
    """
    per_node: dict[int, set[str]] = {}
    for lineno, fields in _records(path):
        if len(fields) != 2 or not fields[0]:
            raise GraphFormatError(path, lineno, "expected 'node<TAB>label1,label2,...'")
        node, raw = fields
        if node not in index:
            if skip_unknown:
                continue
            raise GraphFormatError(path, lineno, f"unknown node {node!r}")
        tokens = [t.strip() for t in raw.split(",")]
        if any(not t for t in tokens):
            raise GraphFormatError(path, lineno, "empty label token")
        per_node.setdefault(index[node], set()).update(tokens)

    labels = tuple(sorted(set().union(*per_node.values()))) if per_node else ()
    col = {lab: c for c, lab in enumerate(labels)}
    assign = np.zeros((len(index), len(labels)), dtype=np.int8)
    for row, labs in per_node.items():
        assign[row, [col[lab] for lab in labs]] = 1
    return LabelMatrix(index, labels, assign)


def labeled_nodes(path) -> set[str]:
    """Node identifiers listed in a label file (no validation against an index)."""
    return {fields[0] for _, fields in _records(path)}
