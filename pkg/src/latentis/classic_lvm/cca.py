"""Canonical correlation analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import as_matrix, model_kind
from ..errors import DimensionError, RankError
from ._common import rows, sign_flip


@model_kind("cca")
@dataclass(frozen=True)
class CcaModel:
    """Canonical directions ``P`` (m x k), ``Q`` (d x k) and their correlations.

    Directions are scaled so every training score has unit variance (1/n).
    """

    proj_x: np.ndarray
    proj_y: np.ndarray
    correlations: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray

    @property
    def k(self) -> int:
        return self.proj_x.shape[1]


def _inv_sqrt(C: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Inverse square-root factor ``F`` with ``F^T C F = I`` on the range of C."""
    try:
        L = np.linalg.cholesky(C)
        # Cholesky alone is unreliable close to singularity.
        if np.min(np.diag(L)) ** 2 > rtol * np.max(np.diag(C)):
            return np.linalg.inv(L).T
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    keep = vals > rtol * vals.max()
    return vecs[:, keep] / np.sqrt(vals[keep])


def fit_cca(X, Y, k: int) -> CcaModel:
    """Solve the two coupled eigenproblems via whitening and one SVD.

    With ``Fx^T Cxx Fx = I`` and ``Fy^T Cyy Fy = I`` the matrix
    ``Fx^T Cxy Fy`` has singular values equal to the canonical correlations;
    mapping its singular vectors back through ``Fx``/``Fy`` gives ``P`` and
    ``Q``. Singular covariance blocks fall back to a pseudo-inverse root.
    """
    Xm, Ym = as_matrix(X), as_matrix(Y)
    if Xm.shape[0] != Ym.shape[0]:
        raise DimensionError(f"X has {Xm.shape[0]} rows, Y has {Ym.shape[0]}")
    n, m = Xm.shape
    d = Ym.shape[1]
    if not 1 <= k <= min(m, d):
        raise RankError(f"k={k} out of range 1..{min(m, d)}")
    x_mean, y_mean = Xm.mean(axis=0), Ym.mean(axis=0)
    Xc, Yc = Xm - x_mean, Ym - y_mean
    Cxx, Cyy, Cxy = Xc.T @ Xc / n, Yc.T @ Yc / n, Xc.T @ Yc / n
    if np.max(np.diag(Cxx)) <= 0 or np.max(np.diag(Cyy)) <= 0:
        raise ValueError("CCA inputs have zero variance")

    Fx, Fy = _inv_sqrt(Cxx), _inv_sqrt(Cyy)
    if k > min(Fx.shape[1], Fy.shape[1]):
        raise RankError(f"k={k} exceeds the rank of the inputs")
    U, s, Vt = np.linalg.svd(Fx.T @ Cxy @ Fy)
    P = Fx @ U[:, :k]
    Q = Fy @ Vt[:k].T
    signs = sign_flip(P)
    return CcaModel(
        proj_x=P * signs,
        proj_y=Q * signs,
        correlations=np.clip(s[:k], 0.0, 1.0),
        x_mean=x_mean,
        y_mean=y_mean,
    )


def cca_transform(model: CcaModel, X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Canonical scores ``U = X P`` and ``V = Y Q`` (after training centering)."""
    Xm, _ = rows(X, model.proj_x.shape[0], "CCA X block")
    Ym, _ = rows(Y, model.proj_y.shape[0], "CCA Y block")
    return (Xm - model.x_mean) @ model.proj_x, (Ym - model.y_mean) @ model.proj_y


def cca_residuals(model: CcaModel, X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of ``X = U Lx^T + E_X`` and ``Y = V Ly^T + E_Y``.

    The loadings ``Lx``, ``Ly`` are least-squares fits of the centered blocks
    on the scores, so residual norms cannot grow as ``k`` increases.
    """
    U, V = cca_transform(model, X, Y)
    Xc = as_matrix(X) - model.x_mean
    Yc = as_matrix(Y) - model.y_mean
    Lx = np.linalg.lstsq(U, Xc, rcond=None)[0]
    Ly = np.linalg.lstsq(V, Yc, rcond=None)[0]
    return Xc - U @ Lx, Yc - V @ Ly


def cca_eigen_correlations(X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Canonical correlations read off the two non-symmetric eigenproblems directly.

    Returns the square roots of the eigenvalues of
    ``(XtX)^+ XtY (YtY)^+ YtX`` and of ``(YtY)^+ YtX (XtX)^+ XtY``, each sorted
    descending and truncated to ``min(m, d)``. Used as a cross-check of
    :func:`fit_cca`.
    """
    Xc = as_matrix(X) - as_matrix(X).mean(axis=0)
    Yc = as_matrix(Y) - as_matrix(Y).mean(axis=0)
    XtX, YtY, XtY = Xc.T @ Xc, Yc.T @ Yc, Xc.T @ Yc
    Mx = np.linalg.pinv(XtX) @ XtY @ np.linalg.pinv(YtY) @ XtY.T
    My = np.linalg.pinv(YtY) @ XtY.T @ np.linalg.pinv(XtX) @ XtY
    r = min(XtY.shape)
    out = []
    for M in (Mx, My):
        ev = np.sort(np.clip(np.linalg.eigvals(M).real, 0.0, None))[::-1][:r]
        out.append(np.sqrt(ev))
    return out[0], out[1]
