"""Stable numeric primitives and the vector-Jacobian products built on them.

Normalization, softmax, entropy and cosine similarity are the substrate for
every loss in the engine; the two VJPs here are the only hand-derived
derivative rules the gradient pass needs. Everything computes in float64
(stored embeddings are float32 on disk and widened on entry) and raises a
typed error instead of emitting NaN/Inf.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateVector, NonFiniteInput, NotADistribution, ShapeMismatch

# Below this L2 norm a vector counts as degenerate and normalization refuses it.
EPS_NORM = 1e-12

# Tolerance on sum(p) == 1 when validating an externally supplied distribution.
DIST_TOL = 1e-6


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{what} contains NaN or Inf")


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||_2, refusing vectors with norm <= EPS_NORM."""
    v = np.asarray(v, dtype=np.float64)
    _check_finite(v, "vector")
    n = float(np.linalg.norm(v))
    if n <= EPS_NORM:
        raise DegenerateVector(f"cannot normalize: ||v|| = {n:.3e} <= {EPS_NORM:.0e}")
    return v / n


def normalize_rows(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise L2 normalization of a 2-D array.

    Returns (normalized matrix, row norms); the norms are what the
    normalization VJP divides by on the way back.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected 2-D array, got shape {m.shape}")
    _check_finite(m, "matrix")
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms <= EPS_NORM)
    if bad.size:
        raise DegenerateVector(
            f"row {bad[0]} has norm {norms[bad[0]]:.3e} <= {EPS_NORM:.0e}"
        )
    return m / norms[:, None], norms


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax of a 1-D logit vector (max-subtraction)."""
    x = np.asarray(logits, dtype=np.float64)
    _check_finite(x, "logits")
    e = np.exp(x - x.max())
    return e / e.sum()


def log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax of an (N, C) logit matrix."""
    x = np.asarray(logits, dtype=np.float64)
    _check_finite(x, "logits")
    shifted = x - x.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of an (N, C) logit matrix."""
    return np.exp(log_softmax_rows(logits))


def logit_entropies(logits: np.ndarray) -> np.ndarray:
    """Per-row entropy H(softmax(row)) of an (N, C) logit matrix.

    Computed as -sum(p * log p) with p = exp(log_softmax); log p stays finite
    for finite logits, so p == 0 cells contribute an exact 0.
    """
    lp = log_softmax_rows(logits)
    p = np.exp(lp)
    return -(p * lp).sum(axis=1)


def entropy(probs: np.ndarray) -> float:
    """Natural-log entropy of a probability vector; zero entries contribute 0.

    The input must already be a distribution (entries >= 0, sum within
    DIST_TOL of 1); softmax outputs qualify by construction.
    """
    p = np.asarray(probs, dtype=np.float64)
    _check_finite(p, "probabilities")
    if p.min() < 0.0:
        raise NotADistribution(f"negative entry {p.min():.3e}")
    s = float(p.sum())
    if abs(s - 1.0) > DIST_TOL:
        raise NotADistribution(f"sum {s!r} deviates from 1 by more than {DIST_TOL:.0e}")
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities: entry (i, j) = <a_i / ||a_i||, b_j / ||b_j||>."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeMismatch(f"incompatible shapes {a.shape} x {b.shape}")
    a_hat, _ = normalize_rows(a)
    b_hat, _ = normalize_rows(b)
    return a_hat @ b_hat.T


def vjp_softmax_entropy(logits: np.ndarray, upstream: float) -> np.ndarray:
    """Gradient of upstream * H(softmax(logits)) with respect to the logits.

    Closed form -p * (log p + H(p)); returned with that sign, i.e. this is
    d/d-logits of the entropy itself scaled by upstream (no extra negation
    for "minimization" is applied here).
    """
    x = np.asarray(logits, dtype=np.float64)
    _check_finite(x, "logits")
    lp = x - x.max()
    lp = lp - np.log(np.exp(lp).sum())
    p = np.exp(lp)
    h = float(-(p * lp).sum())
    return float(upstream) * (-p * (lp + h))


def vjp_l2_normalize(v: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Pull upstream back through v -> v / ||v||: apply (I - vv^T/||v||^2) / ||v||."""
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    if v.shape != u.shape:
        raise ShapeMismatch(f"vector {v.shape} vs upstream {u.shape}")
    _check_finite(v, "vector")
    _check_finite(u, "upstream")
    n = float(np.linalg.norm(v))
    if n <= EPS_NORM:
        raise DegenerateVector(f"cannot differentiate through norm {n:.3e}")
    v_hat = v / n
    return (u - np.dot(u, v_hat) * v_hat) / n
