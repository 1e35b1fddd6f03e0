"""SVD-based rank and nullspace helpers used by every pointwise test."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .config import DEFAULT


def as_float_matrix(rows, ncols: int | None = None) -> np.ndarray:
    rows = [[float(v) for v in row] for row in rows]
    if not rows:
        return np.zeros((0, ncols or 0))
    return np.asarray(rows, dtype=float)


def singular_values(A: np.ndarray) -> np.ndarray:
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def rank_threshold(s: np.ndarray, tol: float) -> float:
    smax = float(s[0]) if s.size else 0.0
    return tol * max(smax, 1.0)


def numeric_rank(A, tol: float = DEFAULT.tol_rank) -> int:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = singular_values(A)
    return int(np.sum(s > rank_threshold(s, tol)))


def nullspace(A, ncols: int, tol: float = DEFAULT.tol_rank) -> np.ndarray:
    """Orthonormal basis (as columns) of ``{x : A x = 0}``."""
    A = np.asarray(A, dtype=float).reshape(-1, ncols)
    if A.shape[0] == 0:
        return np.eye(ncols)
    s = singular_values(A)
    thr = rank_threshold(s, tol)
    # scipy's rcond is relative to sigma_max; translate our floored threshold
    rcond = thr / s[0] if s.size and s[0] > 0 else 0.0
    if s.size and s[0] <= thr:
        return np.eye(ncols)
    return scipy.linalg.null_space(A, rcond=rcond)


def is_zero(value, tol: float = DEFAULT.tol_zero) -> bool:
    if isinstance(value, float):
        return abs(value) <= tol
    return value == 0
