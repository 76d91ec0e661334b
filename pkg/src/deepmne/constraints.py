"""Must-link / cannot-link extraction from hidden representations.

Pairs are ranked by the Pearson correlation of their hidden vectors. Two
selection rules are provided: fixed-size top/bottom sets
(:func:`extract_topk`) and dual thresholds (:func:`extract_threshold`).
Constraints coming from the other networks are combined by intersection
(:func:`merge_constraints`).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .neural import ConstraintMatrices

log = logging.getLogger(__name__)

FULL_PAIRS_MAX_N = 5000
POOL_FACTOR = 100


class DegenerateRowWarning(UserWarning):
    """Rows with zero variance have no defined correlation."""


def _canon(pairs):
    out = set()
    for i, j in pairs:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"constraint pairs node {i} with itself")
        out.add((i, j) if i < j else (j, i))
    return frozenset(out)


@dataclass(frozen=True)
class ConstraintList:
    """Unordered node pairs, stored as ``(i, j)`` with ``i < j``.

    ``conflicts`` records pairs dropped by a merge because they ended up in
    both sets; it does not take part in equality.
    """

    must: frozenset = frozenset()
    cannot: frozenset = frozenset()
    conflicts: frozenset = field(default=frozenset(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "must", _canon(self.must))
        object.__setattr__(self, "cannot", _canon(self.cannot))
        object.__setattr__(self, "conflicts", _canon(self.conflicts))

    def __len__(self):
        return len(self.must) + len(self.cannot)

    def to_matrices(self, n) -> ConstraintMatrices:
        return ConstraintMatrices.from_pairs(n, sorted(self.must), sorted(self.cannot))


def _zero_variance_rows(H):
    return np.ptp(H, axis=1) == 0


def _pair_pcc(H, pairs):
    """Pearson correlation for each row of ``pairs``; NaN where a row is constant."""
    Hc = H - H.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", Hc, Hc))
    bad = _zero_variance_rows(H)
    Z = np.divide(Hc, norms[:, None], out=np.zeros_like(Hc), where=~bad[:, None])
    i, j = pairs[:, 0], pairs[:, 1]
    r = np.clip(np.einsum("ij,ij->i", Z[i], Z[j]), -1.0, 1.0)
    r[bad[i] | bad[j]] = np.nan
    return r


def _all_pairs(n):
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j]).astype(np.int64)


def _sampled_pairs(n, size, seed):
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=size)
    j = rng.integers(0, n - 1, size=size)
    j = j + (j >= i)
    pairs = np.sort(np.column_stack([i, j]), axis=1)
    return np.unique(pairs, axis=0).astype(np.int64)


def candidate_pairs(n, *, max_full_n=FULL_PAIRS_MAX_N, seed=0):
    """All ``i < j`` pairs, or a seeded uniform pool of ``100 * n`` pairs when ``n > max_full_n``."""
    if n <= max_full_n:
        return _all_pairs(n)
    return _sampled_pairs(n, POOL_FACTOR * n, seed)


def _scored_pairs(H, pairs, *, max_full_n, seed):
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[1] < 2:
        raise ValueError(f"need at least 2 hidden dimensions for correlation, got shape {H.shape}")
    n = H.shape[0]
    if pairs is None:
        pairs = candidate_pairs(n, max_full_n=max_full_n, seed=seed)
    else:
        pairs = np.asarray(sorted(_canon(pairs)), dtype=np.int64).reshape(-1, 2)
        if len(pairs) and pairs.max() >= n:
            raise IndexError(f"pair index out of range for {n} rows")
    r = _pair_pcc(H, pairs)
    ok = np.isfinite(r)
    if not ok.all():
        rows = sorted(np.flatnonzero(_zero_variance_rows(H)).tolist())
        warnings.warn(f"{int((~ok).sum())} pair(s) skipped: zero-variance rows {rows[:10]}",
                      DegenerateRowWarning, stacklevel=3)
    return pairs[ok], r[ok]


def pairwise_pcc(H, pairs=None):
    """Pearson correlation between rows of ``H``, keyed by ``(i, j)`` with ``i < j``.

    Pairs touching a constant row are skipped with a :class:`DegenerateRowWarning`.
    """
    pairs, r = _scored_pairs(H, pairs, max_full_n=np.inf, seed=None)
    return {(int(i), int(j)): float(v) for (i, j), v in zip(pairs, r)}


def pairs_for_fraction(n_pairs, fraction):
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"constraint fraction must be in [0, 1), got {fraction}")
    return int(np.floor(fraction * n_pairs))


def _as_arrays(scores):
    if not scores:
        return np.empty((0, 2), dtype=np.int64), np.empty(0)
    keys = sorted(scores)
    pairs = np.array([(min(p), max(p)) for p in keys], dtype=np.int64)
    return pairs, np.array([scores[p] for p in keys], dtype=float)


def _topk(pairs, r, k):
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    if 2 * k > len(pairs):
        raise ValueError(f"k={k} too large: only {len(pairs)} scorable pairs")
    if k == 0:
        return ConstraintList()
    order = np.lexsort((pairs[:, 1], pairs[:, 0], -r))
    must = pairs[order[:k]]
    cannot = pairs[order[-k:]]
    return ConstraintList(map(tuple, must.tolist()), map(tuple, cannot.tolist()))


def _threshold(pairs, r, f1, f2):
    if not f2 < f1:
        raise ValueError(f"cannot-link threshold f2={f2} must be below must-link threshold f1={f1}")
    return ConstraintList(map(tuple, pairs[r > f1].tolist()), map(tuple, pairs[r < f2].tolist()))


def select_topk(scores, k) -> ConstraintList:
    """Top-``k`` selection on a precomputed ``{(i, j): correlation}`` map."""
    return _topk(*_as_arrays(scores), k)


def select_threshold(scores, f1=0.95, f2=-0.5) -> ConstraintList:
    """Threshold selection on a precomputed ``{(i, j): correlation}`` map."""
    return _threshold(*_as_arrays(scores), f1, f2)


def extract_topk(H, k, *, max_full_n=FULL_PAIRS_MAX_N, seed=0) -> ConstraintList:
    """The ``k`` most correlated pairs become must-links, the ``k`` least correlated cannot-links.

    Pairs are put in one total order (correlation descending, then ``(i, j)``
    ascending) and the two sets are its head and tail, so they never overlap.
    """
    pairs, r = _scored_pairs(H, None, max_full_n=max_full_n, seed=seed)
    return _topk(pairs, r, k)


def extract_fraction(H, fraction, *, max_full_n=FULL_PAIRS_MAX_N, seed=0) -> ConstraintList:
    """:func:`extract_topk` with ``k`` given as a fraction of the candidate pairs."""
    n = np.asarray(H).shape[0]
    n_pairs = n * (n - 1) // 2 if n <= max_full_n else len(candidate_pairs(n, max_full_n=max_full_n, seed=seed))
    return extract_topk(H, pairs_for_fraction(n_pairs, fraction), max_full_n=max_full_n, seed=seed)


def extract_threshold(H, f1=0.95, f2=-0.5, *, max_full_n=FULL_PAIRS_MAX_N, seed=0) -> ConstraintList:
    """Must-link where correlation > ``f1``, cannot-link where correlation < ``f2``."""
    if not f2 < f1:
        raise ValueError(f"cannot-link threshold f2={f2} must be below must-link threshold f1={f1}")
    pairs, r = _scored_pairs(H, None, max_full_n=max_full_n, seed=seed)
    return _threshold(pairs, r, f1, f2)


def merge_constraints(lists) -> ConstraintList:
    """Intersect must-sets and cannot-sets across ``lists``.

    A pair surviving in both intersections is dropped from both and listed
    in ``conflicts`` of the result.
    """
    lists = list(lists)
    if not lists:
        raise ValueError("merge needs at least one constraint list")
    must = reduce(frozenset.intersection, (c.must for c in lists))
    cannot = reduce(frozenset.intersection, (c.cannot for c in lists))
    clash = must & cannot
    if clash:
        log.info("dropping %d conflicting constraint pair(s) after merge", len(clash))
    return ConstraintList(must - clash, cannot - clash, clash)


def constraint_drift(a: ConstraintList, b: ConstraintList) -> int:
    """Size of the symmetric difference between two constraint lists."""
    return len(a.must ^ b.must) + len(a.cannot ^ b.cannot)


def write_constraints(cl: ConstraintList, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tag, pairs in (("M", cl.must), ("C", cl.cannot)):
            for i, j in sorted(pairs):
                fh.write(f"{tag}\t{i}\t{j}\n")


def read_constraints(path) -> ConstraintList:
    must, cannot = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[0] not in ("M", "C"):
                raise ValueError(f"{path}:{lineno}: expected 'M|C<TAB>i<TAB>j'")
            (must if parts[0] == "M" else cannot).append((int(parts[1]), int(parts[2])))
    return ConstraintList(must, cannot)
