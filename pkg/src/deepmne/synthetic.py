"""Planted-community networks with known labels, for demos and tests."""
from __future__ import annotations

import numpy as np

from .graph_io import LabelMatrix, NodeIndex, WeightedGraph


def node_names(n):
    width = len(str(n - 1))
    return [f"v{i:0{width}d}" for i in range(n)]


def community_sizes(n, n_communities):
    return [len(c) for c in np.array_split(np.arange(n), n_communities)]


def planted_partition(n, n_communities, p_in, p_out, n_networks=1, seed=0, weighted=False):
    """Independent planted-partition draws over one shared node set.

    Nodes are split into ``n_communities`` contiguous, near-equal blocks.
    Each network draws every pair independently with probability ``p_in``
    (same block) or ``p_out`` (different blocks). With ``weighted=True``
    edge weights are uniform on (0, 1]; otherwise they are 1.

    Returns
    -------
    graphs : list of WeightedGraph
    labels : LabelMatrix
        One-hot block membership, labels ``c0, c1, ...``.
    """
    rng = np.random.default_rng(seed)
    index = NodeIndex.from_names(node_names(n))
    block = np.repeat(np.arange(n_communities), community_sizes(n, n_communities))
    same = block[:, None] == block[None, :]
    prob = np.where(same, p_in, p_out)
    iu = np.triu_indices(n, k=1)
    graphs = []
    for _ in range(n_networks):
        hit = rng.random(iu[0].size) < prob[iu]
        if weighted:
            w = 1.0 - rng.random(iu[0].size)
        else:
            w = np.ones(iu[0].size)
        edges = tuple((int(i), int(j), float(x)) for i, j, x, h in zip(*iu, w, hit) if h)
        graphs.append(WeightedGraph(index, edges))
    assign = np.zeros((n, n_communities), dtype=np.int8)
    assign[np.arange(n), block] = 1
    labels = LabelMatrix(index, tuple(f"c{c}" for c in range(n_communities)), assign)
    return graphs, labels
