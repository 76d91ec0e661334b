"""Random walk with restart (RWR) over a column-stochastic transition matrix.

``S[i, j]`` is the steady-state probability of sitting on node ``i`` for a
walk that restarts at node ``j``; column ``j`` is therefore node ``j``'s
diffusion profile and is what the embedding stage consumes as that node's
feature vector (see :func:`node_features`).
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"DMNE"
VERSION = 1
EXACT_MAX_N = 2000


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class DiffusionMatrix:
    S: np.ndarray
    alpha: float
    iterations_used: int = 0
    residual: float = 0.0
    converged: bool = True
    isolated: frozenset = frozenset()
    residual_history: list = field(default_factory=list, repr=False)

    @property
    def n(self):
        return self.S.shape[0]


def transition_matrix(A):
    """Column-normalize an adjacency matrix.

    Returns
    -------
    T : ndarray
        ``T[i, j] = A[i, j] / sum_i A[i, j]``; zero-degree columns stay zero.
    isolated : frozenset of int
        Indices of the zero-degree columns.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if np.any(A < 0):
        raise ValueError("adjacency has negative entries")
    deg = A.sum(axis=0)
    isolated = deg == 0
    T = np.divide(A, deg, out=np.zeros_like(A), where=~isolated)
    return T, frozenset(np.flatnonzero(isolated).tolist())


def _isolated_from(T):
    return frozenset(np.flatnonzero(~T.any(axis=0)).tolist())


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"restart probability alpha must be in (0, 1], got {alpha}")


def rwr(T, alpha=0.5, tol=1e-8, max_iter=1000):
    """Iterate ``s <- (1 - alpha) T s + alpha e_j`` for every start node ``j`` at once.

    Columns are independent, so iterating them jointly until the largest
    column change drops below ``tol`` gives each column at least the
    precision it would get alone. Zero-degree start nodes are pinned to
    their restart vector. If ``max_iter`` is exhausted the partial result
    is returned with ``converged=False`` and a :class:`ConvergenceWarning`.
    """
    _check_alpha(alpha)
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    isolated = _isolated_from(T)
    restart = alpha * np.eye(n)
    S = np.eye(n)
    history = []
    residual = np.inf
    it = 0
    while it < max_iter:
        S_next = (1.0 - alpha) * (T @ S) + restart
        residual = float(np.max(np.abs(S_next - S))) if n else 0.0
        S = S_next
        it += 1
        history.append(residual)
        if residual < tol:
            break
    converged = residual < tol
    if not converged:
        warnings.warn(
            f"RWR did not converge in {max_iter} iterations (residual {residual:.3e} >= tol {tol:.1e})",
            ConvergenceWarning, stacklevel=2)
    if isolated:
        idx = sorted(isolated)
        S[:, idx] = 0.0
        S[idx, idx] = 1.0
    return DiffusionMatrix(S, float(alpha), it, residual, converged, isolated, history)


def rwr_exact(T, alpha=0.5):
    """Fixed point of the RWR recurrence by a dense linear solve.

    Solves ``(I - (1 - alpha) T) S = alpha I``; independent of :func:`rwr`
    and meant as its reference.
    """
    _check_alpha(alpha)
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if n > EXACT_MAX_N:
        raise ValueError(f"rwr_exact is limited to n <= {EXACT_MAX_N}, got {n}")
    system = np.eye(n) - (1.0 - alpha) * T
    # spectral radius of (1 - alpha) T is at most 1 - alpha < 1
    assert alpha > 0
    S = np.linalg.solve(system, alpha * np.eye(n))
    isolated = _isolated_from(T)
    if isolated:
        idx = sorted(isolated)
        S[:, idx] = 0.0
        S[idx, idx] = 1.0
    return DiffusionMatrix(S, float(alpha), 0, 0.0, True, isolated)


def node_features(dm: DiffusionMatrix) -> np.ndarray:
    """Row ``i`` is the diffusion profile of a walk started at node ``i``."""
    return np.ascontiguousarray(dm.S.T)


def save_diffusion(dm: DiffusionMatrix, path) -> None:
    n = dm.n
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, n))
        fh.write(np.ascontiguousarray(dm.S, dtype="<f8").tobytes(order="C"))
        fh.write(struct.pack("<d", dm.alpha))


def load_diffusion(path) -> DiffusionMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a diffusion matrix file (bad magic)")
    version, n = struct.unpack_from("<IQ", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    offset = 4 + 12
    expected = offset + 8 * n * n + 8
    if len(data) != expected:
        raise ValueError(f"{path}: truncated or oversized file ({len(data)} bytes, expected {expected})")
    S = np.frombuffer(data, dtype="<f8", count=n * n, offset=offset).reshape(n, n).astype(float)
    (alpha,) = struct.unpack_from("<d", data, offset + 8 * n * n)
    return DiffusionMatrix(S, alpha)
