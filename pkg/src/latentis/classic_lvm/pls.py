"""Partial least squares with rank-one X deflation (SVD or NIPALS)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..dataio import as_matrix, model_kind
from ..errors import ConvergenceWarning, DimensionError, RankError
from ._common import rows, sign_flip


@model_kind("pls")
@dataclass(frozen=True)
class PlsModel:
    """Fitted PLS components.

    Columns of ``x_weights`` (m x k) and ``y_weights`` (d x k) are the unit
    weight vectors p_j, q_j. ``x_loadings`` are the deflation loadings
    ``X_j^T u_j / |u_j|^2`` and ``rotations`` map centered X straight to the
    scores, ``U = (X - x_mean) R``.
    """

    x_weights: np.ndarray
    y_weights: np.ndarray
    x_loadings: np.ndarray
    rotations: np.ndarray
    x_scores: np.ndarray
    y_scores: np.ndarray
    coefficients: np.ndarray
    singular_values: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray

    @property
    def k(self) -> int:
        return self.x_weights.shape[1]

    @property
    def m(self) -> int:
        return self.x_weights.shape[0]

    @property
    def d(self) -> int:
        return self.y_weights.shape[0]


def _leading_svd(M):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U[:, 0], Vt[0], s[0]


def _leading_nipals(X, Y, tol=1e-15, max_iter=20000):
    # power method on X^T Y starting from the highest-variance Y column
    v = Y[:, np.argmax(np.sum(Y**2, axis=0))]
    p = X.T @ v
    p /= np.linalg.norm(p)
    for _ in range(max_iter):
        u = X @ p
        q = Y.T @ u
        q /= np.linalg.norm(q)
        v = Y @ q
        p_new = X.T @ v
        lam = np.linalg.norm(p_new)
        p_new /= lam
        if np.linalg.norm(p_new - p) < tol:
            p = p_new
            break
        p = p_new
    else:
        warnings.warn("NIPALS did not converge", ConvergenceWarning, stacklevel=3)
    q = Y.T @ (X @ p)
    lam = np.linalg.norm(q)
    return p, q / lam, lam


def fit_pls(X, Y, k: int, algorithm: str = "svd", rank_tol: float = 1e-10) -> PlsModel:
    """Extract ``k`` PLS components.

    Each component takes the leading singular pair (p, q) of ``X_j^T Y``,
    forms ``u = X_j p`` and ``v = Y q`` and deflates only X:
    ``X_{j+1} = X_j - u u^T X_j / |u|^2``. Y is never deflated. The
    regression matrix is the least-squares fit of centered Y on the scores.

    If the cross-covariance vanishes before ``k`` components (Y already in
    the span of earlier scores, or X^T Y = 0 outright) the model keeps only
    the components found so far and a :class:`ConvergenceWarning` is issued.
    """
    if algorithm not in ("svd", "nipals"):
        raise ValueError(f"unknown PLS algorithm {algorithm!r}")
    Xm, Ym = as_matrix(X), as_matrix(Y)
    if Xm.shape[0] != Ym.shape[0]:
        raise DimensionError(f"X has {Xm.shape[0]} rows, Y has {Ym.shape[0]}")
    n, m = Xm.shape
    d = Ym.shape[1]
    x_mean, y_mean = Xm.mean(axis=0), Ym.mean(axis=0)
    Xj, Yc = Xm - x_mean, Ym - y_mean
    if k < 0:
        raise RankError(f"k={k} must be non-negative")
    svals = np.linalg.svd(Xj, compute_uv=False)
    rank = int(np.sum(svals > rank_tol * max(svals[0], 1e-300) * max(n, m))) if svals.size else 0
    if k > rank:
        raise RankError(f"k={k} exceeds rank(X)={rank}")

    P, Q, Gam, U, V, lams = [], [], [], [], [], []
    scale = np.linalg.norm(Xm - x_mean) * np.linalg.norm(Yc)
    for j in range(k):
        M = Xj.T @ Yc
        if np.linalg.norm(M) <= rank_tol * max(scale, 1e-300):
            warnings.warn(
                f"cross-covariance vanished after {j} of {k} components",
                ConvergenceWarning,
                stacklevel=2,
            )
            break
        if algorithm == "svd":
            p, q, lam = _leading_svd(M)
        else:
            p, q, lam = _leading_nipals(Xj, Yc)
        s = sign_flip(p[:, None])[0]
        p, q = p * s, q * s
        u = Xj @ p
        gam = Xj.T @ u / (u @ u)
        Xj = Xj - np.outer(u, gam)
        P.append(p), Q.append(q), Gam.append(gam), U.append(u), V.append(Yc @ q), lams.append(lam)

    kk = len(P)
    Pm = np.array(P).T.reshape(m, kk)
    Gm = np.array(Gam).T.reshape(m, kk)
    Um = np.array(U).T.reshape(n, kk)
    R = Pm @ np.linalg.inv(Gm.T @ Pm) if kk else np.zeros((m, 0))
    C = (Um.T @ Yc) / np.sum(Um**2, axis=0)[:, None] if kk else np.zeros((0, d))
    return PlsModel(
        x_weights=Pm,
        y_weights=np.array(Q).T.reshape(d, kk),
        x_loadings=Gm,
        rotations=R,
        x_scores=Um,
        y_scores=np.array(V).T.reshape(n, kk),
        coefficients=R @ C,
        singular_values=np.array(lams, dtype=float),
        x_mean=x_mean,
        y_mean=y_mean,
    )


def pls_transform(model: PlsModel, X) -> np.ndarray:
    """X-side scores for new data."""
    Xm, single = rows(X, model.m, "PLS model")
    U = (Xm - model.x_mean) @ model.rotations
    return U[0] if single else U


def pls_predict(model: PlsModel, X) -> np.ndarray:
    """``Y_hat = (X - x_mean) B + y_mean``."""
    Xm, single = rows(X, model.m, "PLS model")
    Yh = (Xm - model.x_mean) @ model.coefficients + model.y_mean
    return Yh[0] if single else Yh
