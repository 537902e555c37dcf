"""Domain-similarity measures (JS, Renyi, MMD) and divergence-to-weight mapping."""
from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import DivergenceUndefinedError, InvalidArgumentError

DEFAULT_RENYI_ALPHA = 0.99


class DivergenceKind(str, Enum):
    JENSEN_SHANNON = "js"
    RENYI = "renyi"
    MMD = "mmd"


def _as_distribution(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty 1-D distribution")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InvalidArgumentError(f"{name} must be finite and nonnegative")
    return v


def kl_divergence(p, q) -> float:
    """KL(p || q) = sum over p_i > 0 of p_i ln(p_i / q_i)."""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.size != q.size:
        raise InvalidArgumentError(f"length mismatch: {p.size} vs {q.size}")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise DivergenceUndefinedError("KL undefined: q has zero mass where p > 0")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def js_divergence(p, q) -> float:
    """Symmetric, bounded smoothing of KL via the midpoint m = (p+q)/2."""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.size != q.size:
        raise InvalidArgumentError(f"length mismatch: {p.size} vs {q.size}")
    m = 0.5 * (p + q)
    return 0.5 * (kl_divergence(p, m) + kl_divergence(q, m))


def renyi_divergence(p, q, alpha: float = DEFAULT_RENYI_ALPHA) -> float:
    """D_alpha(p || q) = ln(sum p_i^alpha / q_i^(alpha-1)) / (alpha - 1).

    Requires alpha > 0 and alpha != 1 (use kl_divergence for the alpha -> 1
    limit). Terms with p_i = 0 contribute nothing.
    """
    if not (alpha > 0):
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    if alpha == 1.0:
        raise InvalidArgumentError("alpha = 1 is the KL limit; call kl_divergence")
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.size != q.size:
        raise InvalidArgumentError(f"length mismatch: {p.size} vs {q.size}")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise DivergenceUndefinedError("Renyi undefined: q has zero mass where p > 0")
    # exp-log form keeps p^alpha / q^(alpha-1) stable for alpha near 1
    terms = np.exp(alpha * np.log(p[mask]) - (alpha - 1.0) * np.log(q[mask]))
    return float(np.log(terms.sum()) / (alpha - 1.0))


def mmd(reprs_source, reprs_target) -> float:
    """Euclidean distance between the mean rows of two representation matrices."""
    a = np.asarray(reprs_source, dtype=np.float64)
    b = np.asarray(reprs_target, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] == 0 or b.shape[0] == 0:
        raise InvalidArgumentError("representation matrices must be non-empty and 2-D")
    if a.shape[1] != b.shape[1]:
        raise InvalidArgumentError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(np.linalg.norm(a.mean(axis=0) - b.mean(axis=0)))


def similarity_weights(divergences) -> np.ndarray:
    """Softmin weights: w_i = exp(-d_i) / sum_j exp(-d_j).

    Smaller divergence means larger weight; invariant to shifting every
    divergence by a constant.
    """
    d = np.asarray(divergences, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise InvalidArgumentError("divergences must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise InvalidArgumentError("divergences must be finite and >= 0")
    w = np.exp(-(d - d.min()))
    return w / w.sum()
