"""Deterministic numerical kernels: softmax, cross-entropy, cosine, Pearson, PCA.

All logarithms are natural logs. Every function is pure and safe to call
concurrently.
"""
from __future__ import annotations

import numpy as np
from scipy.special import stdtr

from .errors import DegenerateInputError, DegenerateVectorError, InvalidArgumentError

# Lower clamp applied to predicted probabilities before taking logs, so that
# one-hot targets never produce -inf.
LOG_EPS = 1e-12


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return v


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax: exp(z - max(z)) / sum."""
    z = _as_vector(logits, "logits")
    e = np.exp(z - z.max())
    return e / e.sum()


def tempered_softmax(logits, tau: float) -> np.ndarray:
    """softmax(logits / tau). Higher tau flattens the distribution; tau=1 is softmax."""
    if not (tau > 0):
        raise InvalidArgumentError(f"tau must be > 0, got {tau}")
    z = _as_vector(logits, "logits")
    return softmax(z / tau)


def cross_entropy(target, pred) -> float:
    """H(p, q) = -sum p_i ln q_i, with q clamped to [LOG_EPS, 1] before the log."""
    p = _as_vector(target, "target")
    q = _as_vector(pred, "pred")
    if p.shape != q.shape:
        raise InvalidArgumentError(f"length mismatch: {p.size} vs {q.size}")
    return float(-np.sum(p * np.log(np.clip(q, LOG_EPS, 1.0))))


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clipped to [-1, 1]."""
    a = _as_vector(u, "u")
    b = _as_vector(v, "v")
    if a.shape != b.shape:
        raise InvalidArgumentError(f"length mismatch: {a.size} vs {b.size}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine of a zero-norm vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def pearson(xs, ys) -> tuple[float, float]:
    """Pearson correlation of two series.

    Returns (r, p) where p is the two-tailed p-value of
    t = r * sqrt((n-2) / (1-r^2)) against Student-t with n-2 degrees of
    freedom. Series must have length >= 3 and nonzero variance.
    """
    x = _as_vector(xs, "xs")
    y = _as_vector(ys, "ys")
    if x.size != y.size:
        raise InvalidArgumentError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("zero variance: Pearson correlation undefined")
    r = float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return r, p


def pca_project(rows, k: int) -> np.ndarray:
    """Project rows onto their top-k principal directions.

    Rows are mean-centered internally. Components are ordered by descending
    explained variance; each eigenvector is flipped so its largest-magnitude
    loading is positive, which makes the output deterministic.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise InvalidArgumentError("rows must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("rows contain non-finite entries")
    n, d = x.shape
    if not (1 <= k <= min(n, d)):
        raise InvalidArgumentError(f"k must be in [1, {min(n, d)}], got {k}")
    xc = x - x.mean(axis=0)
    cov = (xc.T @ xc) / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending eigenvalues
    order = np.argsort(eigvals, kind="stable")[::-1][:k]
    comps = eigvecs[:, order]
    for j in range(k):
        lead = np.argmax(np.abs(comps[:, j]))
        if comps[lead, j] < 0:
            comps[:, j] = -comps[:, j]
    return xc @ comps
