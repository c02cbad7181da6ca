"""Small linear-algebra helpers shared by the classic models."""

from __future__ import annotations

import numpy as np

from ..dataio import as_matrix
from ..errors import DimensionError


def sign_flip(vectors: np.ndarray) -> np.ndarray:
    """Per-column signs making each column's largest-magnitude entry positive."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1] if vectors.ndim == 2 else 0)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def sym_eig_desc(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix, descending, sign-normalized, clamped at 0."""
    C = 0.5 * (C + C.T)
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    vals = np.where(vals < 0, 0.0, vals)
    vecs = vecs * sign_flip(vecs)
    return vals, vecs


def rows(data, m: int, what: str = "model") -> tuple[np.ndarray, bool]:
    """Samples-as-rows matrix checked against ``m`` columns; flags 1-D input."""
    arr = as_matrix(data, ndim=0)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if X.ndim != 2 or X.shape[1] != m:
        raise DimensionError(f"{what} expects {m} variables, got shape {arr.shape}")
    return X, single
