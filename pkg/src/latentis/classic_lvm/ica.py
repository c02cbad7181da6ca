"""Independent component analysis by symmetric FastICA with a tanh contrast.

Data matrices follow the variables-by-samples orientation (m x n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import as_matrix, model_kind
from ..errors import DimensionError, RankError
from ._common import sign_flip
from .pca import whiten

# E[log cosh(v)] for v ~ N(0, 1)
GAUSS_LOGCOSH = 0.37456720749549
# Components whose log-cosh moment sits within this many standard errors of
# the Gaussian value are treated as indistinguishable from Gaussian noise.
GAUSSIAN_Z = 4.0


@model_kind("ica")
@dataclass(frozen=True)
class IcaModel:
    """Whitening ``V`` (k x m), separating ``W`` (k x m), mixing ``A`` (m x k).

    ``nongaussianity`` holds, per source, the distance of its log-cosh
    moment from the Gaussian value in standard errors.
    """

    whitening: np.ndarray
    separating: np.ndarray
    mixing: np.ndarray
    mean: np.ndarray
    nongaussianity: np.ndarray
    converged: bool = True
    n_iter: int = 0

    @property
    def k(self) -> int:
        return self.separating.shape[0]

    @property
    def m(self) -> int:
        return self.separating.shape[1]

    @property
    def ambiguous(self) -> bool:
        """True when the unmixing is not identifiable from the data."""
        return (not self.converged) or bool(np.any(self.nongaussianity < GAUSSIAN_Z))


def _logcosh(y):
    a = np.abs(y)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def _sym_decorrelate(W):
    vals, vecs = np.linalg.eigh(W @ W.T)
    return (vecs / np.sqrt(vals)) @ vecs.T @ W


def fit_ica(data, k: int, max_iter: int = 1000, tol: float = 1e-8, seed: int = 0) -> IcaModel:
    """Fit ``k`` independent sources from an m x n data matrix.

    The data are centered and whitened, then the rotation is found with the
    symmetric fixed-point iteration ``W <- E[z g(Wz)] - E[g'(Wz)] W`` followed
    by ``W <- (W W^T)^-1/2 W``. Sources are ordered by decreasing norm of
    their separating row and sign-normalized on the mixing columns.
    """
    X = as_matrix(data)
    m, n = X.shape
    if not 1 <= k <= m:
        raise RankError(f"k={k} out of range 1..{m}")
    if n <= m:
        raise ValueError(f"ICA needs more samples than variables (n={n}, m={m})")

    mean = X.mean(axis=1)
    Z, V = whiten(X - mean[:, None], k)

    rng = np.random.default_rng(seed)
    W = _sym_decorrelate(rng.standard_normal((k, k)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Y = W @ Z
        gY = np.tanh(Y)
        dg = 1.0 - gY**2
        W_new = _sym_decorrelate(gY @ Z.T / n - dg.mean(axis=1)[:, None] * W)
        lim = np.max(np.abs(np.abs(np.sum(W_new * W, axis=1)) - 1.0))
        W = W_new
        if lim < tol:
            converged = True
            break

    separating = W @ V
    order = np.argsort(-np.linalg.norm(separating, axis=1), kind="stable")
    separating = separating[order]
    mixing = np.linalg.pinv(separating)
    signs = sign_flip(mixing)
    separating = separating * signs[:, None]
    mixing = mixing * signs

    S = separating @ (X - mean[:, None])
    G = _logcosh(S)
    z = np.abs(G.mean(axis=1) - GAUSS_LOGCOSH) / (G.std(axis=1) / np.sqrt(n))
    return IcaModel(
        whitening=V,
        separating=separating,
        mixing=mixing,
        mean=mean,
        nongaussianity=z,
        converged=converged,
        n_iter=it,
    )


def ica_sources(model: IcaModel, data) -> np.ndarray:
    """Estimated sources ``W (X - mean)`` for an m x n matrix (or an m-vector)."""
    X = as_matrix(data, ndim=0)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != model.m:
        raise DimensionError(f"ICA model expects {model.m} variables, got shape {X.shape}")
    S = model.separating @ (X - model.mean[:, None])
    return S[:, 0] if single else S


def ica_reconstruct(model: IcaModel, sources) -> np.ndarray:
    """Back-projection ``A S`` plus the mean."""
    S = as_matrix(sources, ndim=0)
    single = S.ndim == 1
    if single:
        S = S[:, None]
    if S.shape[0] != model.k:
        raise DimensionError(f"expected {model.k} sources, got shape {S.shape}")
    X = model.mixing @ S + model.mean[:, None]
    return X[:, 0] if single else X
