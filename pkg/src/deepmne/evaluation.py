"""Multi-label node classification on embeddings.

A linear one-vs-rest logistic model is trained per label, and predictions
are scored with four micro-averaged metrics that pool every
``(node, label)`` cell into one tally. :func:`score_report` accepts any
score matrix, so other classifiers can be evaluated the same way.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

METRICS = ("accuracy", "micro_f1", "micro_auprc", "micro_auroc")


class UndefinedMetricError(ValueError):
    """Ranking metric requested on cells that are all positive or all negative."""


class SkippedLabelWarning(UserWarning):
    pass


@dataclass
class LinearOvrModel:
    """Per-label weights; column ``d`` of ``weights`` is the bias."""

    weights: np.ndarray
    skipped: tuple = ()

    @property
    def n_features(self):
        return self.weights.shape[1] - 1


def train_ovr(X, Y, epochs=500, lr=0.5, seed=0):
    """Fit one logistic classifier per label by full-batch gradient descent.

    Features are standardized internally and the scaling is folded back into
    the returned weights. Labels without a positive example are skipped:
    their weight row stays zero and their index is listed in ``skipped``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"X {X.shape} and Y {Y.shape} must be 2-D with equal row counts")
    n, d = X.shape
    L = Y.shape[1]
    trainable = Y.sum(axis=0) > 0
    if not trainable.any():
        raise ValueError("no label has a positive example; nothing to train")
    skipped = tuple(int(c) for c in np.flatnonzero(~trainable))
    if skipped:
        warnings.warn(f"labels without positives skipped: {list(skipped)}", SkippedLabelWarning, stacklevel=2)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd

    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(L, d))
    b = np.zeros(L)
    W[~trainable] = 0.0
    mask = trainable.astype(float)
    for _ in range(epochs):
        G = (expit(Z @ W.T + b) - Y) / n * mask
        W -= lr * (G.T @ Z)
        b -= lr * G.sum(axis=0)

    W_raw = W / sd
    b_raw = b - W_raw @ mu
    return LinearOvrModel(np.column_stack([W_raw, b_raw]), skipped)


def predict_scores(model: LinearOvrModel, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got shape {X.shape}")
    return expit(X @ model.weights[:, :-1].T + model.weights[:, -1])


def binarize(scores, threshold=0.5):
    return (np.asarray(scores) > threshold).astype(np.int8)


def _same_shape(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def micro_f1(Y_true, Y_pred):
    t, p = _same_shape(Y_true, Y_pred)
    t = t.astype(bool)
    p = p.astype(bool)
    tp = np.sum(t & p)
    fp = np.sum(~t & p)
    fn = np.sum(t & ~p)
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def accuracy(Y_true, Y_pred):
    """Fraction of ``(node, label)`` cells predicted correctly."""
    t, p = _same_shape(Y_true, Y_pred)
    if t.size == 0:
        return 0.0
    return float(np.mean(t.astype(bool) == p.astype(bool)))


def _pooled(Y_true, scores):
    t, s = _same_shape(Y_true, scores)
    y = t.astype(bool).ravel()
    s = s.astype(float).ravel()
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"need positive and negative cells, got {n_pos} positive / {n_neg} negative")
    return y, s, n_pos, n_neg


def micro_auroc(Y_true, scores):
    """Mann-Whitney AUROC over all cells; tied scores count one half."""
    y, s, n_pos, n_neg = _pooled(Y_true, scores)
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def micro_auprc(Y_true, scores):
    """Non-interpolated area under the precision-recall curve.

    Thresholds sweep the distinct scores from high to low; each step adds
    ``(recall gain) * precision`` at that threshold.
    """
    y, s, n_pos, _ = _pooled(Y_true, scores)
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # last position of each run of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    tp, fp = tp[ends], fp[ends]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def score_report(Y_true, scores, threshold=0.5):
    """All four metrics for one score matrix. Ranking metrics may raise :class:`UndefinedMetricError`."""
    pred = binarize(scores, threshold)
    return {
        "accuracy": accuracy(Y_true, pred),
        "micro_f1": micro_f1(Y_true, pred),
        "micro_auprc": micro_auprc(Y_true, scores),
        "micro_auroc": micro_auroc(Y_true, scores),
    }


@dataclass
class MetricsReport:
    accuracy: float
    micro_f1: float
    micro_auprc: float
    micro_auroc: float
    per_fold: list = field(default_factory=list)
    fold_seed: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fold_assignment(n, k, seed):
    """Seeded shuffle split into ``k`` near-equal folds of row indices."""
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


def kfold_cv(X, Y, k=5, seed=0, epochs=500, lr=0.5):
    """k-fold cross-validation of :func:`train_ovr`.

    Folds whose held-out cells lack either class get ``defined = False``,
    are reported in ``warnings`` and left out of the averages.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y)
    n = X.shape[0]
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ValueError(f"{n} samples cannot be split into {k} folds")
    if Y.shape[0] != n:
        raise ValueError(f"X has {n} rows but Y has {Y.shape[0]}")

    notes = []
    per_fold = []
    folds = fold_assignment(n, k, seed)
    for f, test in enumerate(folds):
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        entry = {"fold": f, "n_test": int(len(test)), "defined": True}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SkippedLabelWarning)
                model = train_ovr(X[train], Y[train], epochs=epochs, lr=lr, seed=seed + f)
            if model.skipped:
                entry["skipped_labels"] = list(model.skipped)
                notes.append(f"fold {f}: skipped labels {list(model.skipped)}")
            entry.update(score_report(Y[test], predict_scores(model, X[test])))
        except (UndefinedMetricError, ValueError) as exc:
            entry["defined"] = False
            entry["reason"] = str(exc)
            notes.append(f"fold {f}: undefined ({exc})")
        per_fold.append(entry)

    defined = [e for e in per_fold if e["defined"]]
    if len(defined) < len(per_fold):
        warnings.warn(f"{len(per_fold) - len(defined)} fold(s) excluded from the mean", RuntimeWarning, stacklevel=2)
    means = {m: (float(np.mean([e[m] for e in defined])) if defined else None) for m in METRICS}
    return MetricsReport(per_fold=per_fold, fold_seed=int(seed), warnings=notes, **means)


def write_scores_tsv(scores, node_ids, label_ids, path):
    scores = np.asarray(scores, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node\t" + "\t".join(label_ids) + "\n")
        for node, row in zip(node_ids, scores):
            fh.write(node + "\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def read_scores_tsv(path):
    """Return ``(node_ids, label_ids, scores)``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        labels = header[1:]
        nodes, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
            nodes.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return nodes, labels, np.array(rows, dtype=float).reshape(len(rows), len(labels))
