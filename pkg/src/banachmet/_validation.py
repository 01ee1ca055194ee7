"""Input validation helpers built on scikit-learn's ``check_array``."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from . import volume


def check_operator(a, dim: int | None = None) -> np.ndarray:
    """Finite square float matrix, optionally of a given size."""
    a = check_array(a, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"operator must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"operator must be {dim}x{dim}, got {a.shape[0]}x{a.shape[1]}")
    return a


def check_operator_stack(ops) -> np.ndarray:
    """Stack of N >= 1 finite square operators with shape (N, d, d)."""
    ops = check_array(ops, dtype=np.float64, allow_nd=True, ensure_2d=False,
                      ensure_all_finite=True)
    if ops.ndim == 2:
        ops = ops[None]
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
        raise ValueError(f"operators must have shape (N, d, d), got {ops.shape}")
    return ops


def check_vectors(x, dim: int) -> np.ndarray:
    """Rows of finite vectors in R^dim; a single vector becomes one row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None]
    x = check_array(x, dtype=np.float64, ensure_all_finite=True)
    if x.shape[1] != dim:
        raise ValueError(f"vectors must have {dim} coordinates, got {x.shape[1]}")
    return x


def check_q(q, dim: int) -> int:
    """Subspace dimension within [1, min(dim, volume budget)]."""
    if isinstance(q, bool) or int(q) != q:
        raise ValueError("q must be an integer")
    q = int(q)
    top = min(dim, volume.Q_MAX)
    if not 1 <= q <= top:
        raise ValueError(f"q must lie in [1, {top}]")
    return q
