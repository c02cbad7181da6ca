"""Principal component analysis via the eigendecomposition of (1/n) X^T X."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import as_matrix, model_kind
from ..errors import RankError
from ._common import rows, sym_eig_desc


@model_kind("pca")
@dataclass(frozen=True)
class PcaModel:
    """Principal and (optionally) residual loadings with the full spectrum.

    ``mean`` is the training mean removed before projection; on data that was
    already centered it is zero up to rounding.
    """

    loadings_p: np.ndarray
    eigenvalues: np.ndarray
    mean: np.ndarray
    loadings_r: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.loadings_p.shape[1]

    @property
    def m(self) -> int:
        return self.loadings_p.shape[0]


def fit_pca(data, k: int | None = None, cpv: float | None = None,
            keep_residual: bool = False) -> PcaModel:
    """Fit PCA retaining ``k`` components, or the fewest reaching ``cpv``.

    The data are re-centered internally. Each loading is sign-normalized so
    that its largest-magnitude entry is positive.
    """
    X = as_matrix(data)
    n, m = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    vals, vecs = sym_eig_desc(Xc.T @ Xc / n)
    if k is None:
        if cpv is None:
            raise ValueError("give either k or cpv")
        k = components_for_cpv(vals, cpv)
    if not 1 <= k <= m:
        raise RankError(f"k={k} out of range 1..{m}")
    return PcaModel(
        loadings_p=vecs[:, :k].copy(),
        eigenvalues=vals,
        mean=mean,
        loadings_r=vecs[:, k:].copy() if keep_residual else None,
    )


def components_for_cpv(eigenvalues: np.ndarray, cpv: float) -> int:
    """Smallest k whose leading eigenvalues explain at least ``cpv`` of the total."""
    if not 0 < cpv <= 1:
        raise ValueError(f"cpv must lie in (0, 1], got {cpv}")
    total = float(np.sum(eigenvalues))
    if total <= 0:
        raise RankError("zero total variance")
    frac = np.cumsum(eigenvalues) / total
    return int(min(np.searchsorted(frac, cpv - 1e-12) + 1, len(eigenvalues)))


def pca_transform(model: PcaModel, data) -> np.ndarray:
    """Principal scores ``T_p = (X - mean) P_p``."""
    X, single = rows(data, model.m, "PCA model")
    T = (X - model.mean) @ model.loadings_p
    return T[0] if single else T


def pca_reconstruct(model: PcaModel, scores) -> np.ndarray:
    """Map scores back to variable space, ``T_p P_p^T`` plus the mean."""
    T, single = rows(scores, model.k, "PCA reconstruction")
    Xh = T @ model.loadings_p.T + model.mean
    return Xh[0] if single else Xh


def pca_residual(model: PcaModel, data) -> np.ndarray:
    """Residual ``E = X - X_hat``."""
    X, single = rows(data, model.m, "PCA model")
    E = X - pca_reconstruct(model, pca_transform(model, X))
    return E[0] if single else E


def whiten(data, k: int, floor: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Sphere a variables-by-samples matrix.

    Returns ``(Z, V)`` with ``V = Lambda^-1/2 P^T`` built from the top ``k``
    eigenpairs of ``(1/n) X X^T`` and ``Z = V X``. The data must already be
    centered. Raises :class:`RankError` when a retained eigenvalue falls below
    ``floor`` times the largest one.
    """
    X = as_matrix(data)
    m, n = X.shape
    if not 1 <= k <= m:
        raise RankError(f"k={k} out of range 1..{m}")
    vals, vecs = sym_eig_desc(X @ X.T / n)
    if vals[0] <= 0 or vals[k - 1] <= floor * vals[0]:
        raise RankError(f"k={k} exceeds the numerical rank of the data")
    V = vecs[:, :k].T / np.sqrt(vals[:k])[:, None]
    return V @ X, V
