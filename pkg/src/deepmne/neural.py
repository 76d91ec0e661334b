"""Dense autoencoder and the constraint-regularized semi-supervised variant.

Samples are rows. For an input batch ``X`` (``b x d``)::

    H = f(X W^T + b)          encoder, W is (hidden x d)
    Y = g(H V^T + c)          decoder, V is (d x hidden)

    loss = sum_i ||y_i - x_i||^2 + lam * L_mc(H)
    L_mc = lambda1 * sum_{i,j} M_ij ||h_i - h_j||^2 - lambda2 * sum_{i,j} C_ij ||h_i - h_j||^2

``M`` and ``C`` are the symmetric 0/1 must-link / cannot-link matrices, so the
double sum visits every constraint in both orientations. That is what makes
``L_mc = 2 lambda1 tr(H^T L_M H) - 2 lambda2 tr(H^T L_C H)`` hold exactly,
with ``L_M = D_M - M``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

ACTIVATIONS = ("sigmoid", "tanh")
PARAM_NAMES = ("encoder.W", "encoder.b", "decoder.W", "decoder.b")
CHECKPOINT_MAGIC = b"SAE1"


class TrainingDivergedError(FloatingPointError):
    pass


def activate(name, z):
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


def activation_slope(name, a):
    """Derivative of the activation expressed through its output ``a``."""
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


@dataclass
class DenseLayer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"bias shape {self.b.shape} incompatible with weights {self.W.shape}")

    @property
    def in_dim(self):
        return self.W.shape[1]

    @property
    def out_dim(self):
        return self.W.shape[0]

    def __call__(self, X):
        return activate(self.activation, X @ self.W.T + self.b)


@dataclass
class AutoencoderPair:
    encoder: DenseLayer
    decoder: DenseLayer

    def __post_init__(self):
        if self.encoder.in_dim != self.decoder.out_dim or self.encoder.out_dim != self.decoder.in_dim:
            raise ValueError(
                f"encoder {self.encoder.in_dim}->{self.encoder.out_dim} does not mirror "
                f"decoder {self.decoder.in_dim}->{self.decoder.out_dim}")

    @property
    def in_dim(self):
        return self.encoder.in_dim

    @property
    def hidden_dim(self):
        return self.encoder.out_dim

    def parameters(self) -> dict:
        return {
            "encoder.W": self.encoder.W,
            "encoder.b": self.encoder.b,
            "decoder.W": self.decoder.W,
            "decoder.b": self.decoder.b,
        }

    @classmethod
    def from_parameters(cls, params, encoder_activation, decoder_activation=None):
        decoder_activation = decoder_activation or encoder_activation
        return cls(DenseLayer(params["encoder.W"], params["encoder.b"], encoder_activation),
                   DenseLayer(params["decoder.W"], params["decoder.b"], decoder_activation))

    def encode(self, X):
        return self.encoder(_as_batch(X, self.in_dim))

    def forward(self, X):
        X = _as_batch(X, self.in_dim)
        H = self.encoder(X)
        return H, self.decoder(H)

    def copy(self):
        return AutoencoderPair.from_parameters(
            {k: v.copy() for k, v in self.parameters().items()},
            self.encoder.activation, self.decoder.activation)


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters. ``lam`` is the overall constraint weight (``"lambda"`` in JSON)."""

    learning_rate: float = 0.1
    batch_size: int = 128
    epochs: int = 200
    lambda1: float = 1.0
    lambda2: float = 1.0
    lam: float = 0.1
    seed: int = 0
    activation: str = "sigmoid"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for name in ("lambda1", "lambda2", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    def to_dict(self):
        return {"learning_rate": self.learning_rate, "batch_size": self.batch_size,
                "epochs": self.epochs, "lambda1": self.lambda1, "lambda2": self.lambda2,
                "lambda": self.lam, "seed": self.seed, "activation": self.activation}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training option(s): {sorted(unknown)}")
        return cls(**d)


def _canonical_pairs(pairs, n, kind):
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if arr.min() < 0 or arr.max() >= n:
        raise IndexError(f"{kind} pair index out of range for n={n}")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError(f"{kind} constraint pairs a node with itself")
    arr = np.sort(arr, axis=1)
    return np.unique(arr, axis=0)


@dataclass(frozen=True)
class ConstraintMatrices:
    """Must-link / cannot-link pairs over ``n`` nodes, stored as sorted ``(i, j)`` rows with ``i < j``."""

    n: int
    must: np.ndarray = field(repr=False)
    cannot: np.ndarray = field(repr=False)

    @classmethod
    def from_pairs(cls, n, must=(), cannot=()):
        must = _canonical_pairs(must, n, "must-link")
        cannot = _canonical_pairs(cannot, n, "cannot-link")
        if len(must) and len(cannot):
            both = set(map(tuple, must.tolist())) & set(map(tuple, cannot.tolist()))
            if both:
                raise ValueError(f"pairs in both must-link and cannot-link sets: {sorted(both)[:5]}")
        return cls(int(n), must, cannot)

    @classmethod
    def empty(cls, n):
        return cls.from_pairs(n)

    @property
    def is_empty(self):
        return len(self.must) == 0 and len(self.cannot) == 0

    def _sym(self, pairs):
        m = len(pairs)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        return sp.csr_matrix((np.ones(2 * m), (rows, cols)), shape=(self.n, self.n))

    @property
    def M(self):
        return self._sym(self.must)

    @property
    def C(self):
        return self._sym(self.cannot)

    def restrict(self, nodes):
        """Constraints with both endpoints in ``nodes``, re-indexed to positions within ``nodes``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        local = np.full(self.n, -1, dtype=np.int64)
        local[nodes] = np.arange(len(nodes))

        def sub(pairs):
            if len(pairs) == 0:
                return np.empty((0, 2), dtype=np.int64)
            mapped = local[pairs]
            keep = (mapped >= 0).all(axis=1)
            return np.sort(mapped[keep], axis=1)

        return ConstraintMatrices(len(nodes), sub(self.must), sub(self.cannot))


def _as_batch(X, in_dim):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != in_dim:
        raise ValueError(f"expected a batch with {in_dim} columns, got shape {X.shape}")
    return X


def _check_rows(H, cm):
    if cm.n != H.shape[0]:
        raise IndexError(f"constraints cover {cm.n} nodes but H has {H.shape[0]} rows")


def init_autoencoder(in_dim, hidden_dim, activation="sigmoid", seed=0):
    """Xavier-uniform weights, zero biases. ``seed`` may be an int or a ``Generator``."""
    if in_dim < 1 or hidden_dim < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    limit = np.sqrt(6.0 / (in_dim + hidden_dim))
    W_enc = rng.uniform(-limit, limit, size=(hidden_dim, in_dim))
    W_dec = rng.uniform(-limit, limit, size=(in_dim, hidden_dim))
    return AutoencoderPair(DenseLayer(W_enc, np.zeros(hidden_dim), activation),
                           DenseLayer(W_dec, np.zeros(in_dim), activation))


def reconstruction_loss(pair, X):
    """Summed squared reconstruction error over the batch."""
    X = _as_batch(X, pair.in_dim)
    _, Y = pair.forward(X)
    return float(np.sum((Y - X) ** 2))


def _pair_sqdist(H, pairs):
    if len(pairs) == 0:
        return 0.0
    diff = H[pairs[:, 0]] - H[pairs[:, 1]]
    return float(np.sum(diff * diff))


def constraint_loss(H, cm, lambda1=1.0, lambda2=1.0):
    """Must-link penalty minus cannot-link reward on hidden rows ``H``.

    Sums over ordered index pairs of the symmetric constraint matrices, so a
    single constraint ``(i, j)`` contributes ``2 * ||h_i - h_j||^2``.
    """
    H = np.asarray(H, dtype=float)
    _check_rows(H, cm)
    return 2.0 * (lambda1 * _pair_sqdist(H, cm.must) - lambda2 * _pair_sqdist(H, cm.cannot))


def laplacian(A):
    """``D - A`` for a symmetric sparse adjacency ``A``."""
    A = sp.csr_matrix(A)
    return sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A


def constraint_loss_trace(H, cm, lambda1=1.0, lambda2=1.0):
    """``2 lambda1 tr(H^T L_M H) - 2 lambda2 tr(H^T L_C H)``."""
    H = np.asarray(H, dtype=float)
    _check_rows(H, cm)
    tr_m = float(np.sum(H * (laplacian(cm.M) @ H)))
    tr_c = float(np.sum(H * (laplacian(cm.C) @ H)))
    return 2.0 * lambda1 * tr_m - 2.0 * lambda2 * tr_c


def _laplacian_product(H, pairs):
    """``L_A @ H`` computed from the pair list of a symmetric 0/1 matrix ``A``."""
    out = np.zeros_like(H)
    if len(pairs):
        diff = H[pairs[:, 0]] - H[pairs[:, 1]]
        np.add.at(out, pairs[:, 0], diff)
        np.add.at(out, pairs[:, 1], -diff)
    return out


def constraint_hidden_grad(H, cm, lambda1=1.0, lambda2=1.0):
    """``dL_mc/dH = 4 lambda1 L_M H - 4 lambda2 L_C H``."""
    return 4.0 * lambda1 * _laplacian_product(H, cm.must) - 4.0 * lambda2 * _laplacian_product(H, cm.cannot)


def total_loss(pair, X, cm, config):
    X = _as_batch(X, pair.in_dim)
    H, Y = pair.forward(X)
    loss = float(np.sum((Y - X) ** 2))
    if config.lam != 0.0 and not cm.is_empty:
        loss += config.lam * constraint_loss(H, cm, config.lambda1, config.lambda2)
    return loss


def _loss_and_gradients(pair, X, cm, config):
    enc, dec = pair.encoder, pair.decoder
    H = enc(X)
    Y = dec(H)
    R = Y - X
    loss = float(np.sum(R * R))

    dZ2 = 2.0 * R * activation_slope(dec.activation, Y)
    dH = dZ2 @ dec.W
    if cm is not None and config.lam != 0.0 and not cm.is_empty:
        _check_rows(H, cm)
        loss += config.lam * constraint_loss(H, cm, config.lambda1, config.lambda2)
        dH = dH + config.lam * constraint_hidden_grad(H, cm, config.lambda1, config.lambda2)
    dZ1 = dH * activation_slope(enc.activation, H)
    grads = {
        "encoder.W": dZ1.T @ X,
        "encoder.b": dZ1.sum(axis=0),
        "decoder.W": dZ2.T @ H,
        "decoder.b": dZ2.sum(axis=0),
    }
    return loss, grads


def gradients(pair, X, cm, config):
    """Analytic gradient of :func:`total_loss` for every parameter block."""
    X = _as_batch(X, pair.in_dim)
    return _loss_and_gradients(pair, X, cm, config)[1]


def sgd_step(pair, grads, learning_rate):
    params = pair.parameters()
    new = {}
    for name, value in params.items():
        g = np.asarray(grads[name])
        if g.shape != value.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {value.shape}")
        new[name] = value - learning_rate * g
    return AutoencoderPair.from_parameters(new, pair.encoder.activation, pair.decoder.activation)


class TrainResult(NamedTuple):
    pair: AutoencoderPair
    H: np.ndarray
    losses: list


def _batches(rng, n, batch_size):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _fit(X, hidden_dim, config, cm):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D input matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input matrix contains NaN or infinite values")
    n, d = X.shape
    if cm is not None and cm.n != n:
        raise ValueError(f"constraints cover {cm.n} nodes but X has {n} rows")
    rng = np.random.default_rng(config.seed)
    pair = init_autoencoder(d, hidden_dim, config.activation, seed=rng)
    losses = []
    for epoch in range(config.epochs):
        epoch_loss = 0.0
        for batch in _batches(rng, n, config.batch_size):
            sub = cm.restrict(batch) if cm is not None else None
            loss, grads = _loss_and_gradients(pair, X[batch], sub, config)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became {loss} at epoch {epoch}; learning rate "
                    f"{config.learning_rate} is likely too high")
            pair = sgd_step(pair, grads, config.learning_rate)
            epoch_loss += loss
        if not all(np.all(np.isfinite(p)) for p in pair.parameters().values()):
            raise TrainingDivergedError(
                f"non-finite parameters after epoch {epoch}; learning rate "
                f"{config.learning_rate} is likely too high")
        losses.append(epoch_loss)
    return TrainResult(pair, pair.encode(X), losses)


def train_autoencoder(X, hidden_dim, config):
    """Plain autoencoder: minibatch SGD on the reconstruction error only."""
    return _fit(X, hidden_dim, config, None)


def train_semi_ae(X, cm, hidden_dim, config):
    """Minibatch SGD on reconstruction error plus the constraint term.

    Each epoch shuffles the rows with the seeded generator; a constraint
    enters a batch's loss only when both of its endpoints fall in that
    batch, so ``batch_size >= n`` reproduces the full objective exactly.
    ``losses`` holds the per-epoch sum of batch losses.
    """
    return _fit(X, hidden_dim, config, cm)


def save_checkpoint(pair, path):
    tags = {name: i for i, name in enumerate(ACTIVATIONS)}
    if pair.encoder.activation != pair.decoder.activation:
        raise ValueError("checkpoint format stores a single activation tag")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<QQB", pair.in_dim, pair.hidden_dim, tags[pair.encoder.activation]))
        for name in PARAM_NAMES:
            fh.write(np.ascontiguousarray(pair.parameters()[name], dtype="<f8").tobytes(order="C"))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not an autoencoder checkpoint (bad magic)")
    in_dim, hidden, tag = struct.unpack_from("<QQB", data, 4)
    if tag >= len(ACTIVATIONS):
        raise ValueError(f"{path}: unknown activation tag {tag}")
    shapes = {"encoder.W": (hidden, in_dim), "encoder.b": (hidden,),
              "decoder.W": (in_dim, hidden), "decoder.b": (in_dim,)}
    offset = 4 + struct.calcsize("<QQB")
    expected = offset + 8 * sum(int(np.prod(s)) for s in shapes.values())
    if len(data) != expected:
        raise ValueError(f"{path}: size {len(data)} bytes, expected {expected}")
    params = {}
    for name in PARAM_NAMES:
        count = int(np.prod(shapes[name]))
        params[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shapes[name]).copy()
        offset += 8 * count
    return AutoencoderPair.from_parameters(params, ACTIVATIONS[tag])
