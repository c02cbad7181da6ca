"""Gaussian mixture model fitted by EM in log space."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..dataio import as_matrix, model_kind
from ..errors import ConvergenceWarning, RankError
from ._common import rows

LOG_2PI = np.log(2.0 * np.pi)
DEGENERATE_MASS = 1e-8


@model_kind("gmm")
@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik_trace: np.ndarray
    converged: bool = True
    n_iter: int = 0
    reinitialized: bool = False

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def m(self) -> int:
        return self.means.shape[1]


def _log_gauss(X, mean, cov):
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, (X - mean).T)
    return -0.5 * (X.shape[1] * LOG_2PI + np.sum(z**2, axis=0)) - np.sum(np.log(np.diag(L)))


def _weighted_logpdf(X, weights, means, covs):
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return np.column_stack([logw[i] + _log_gauss(X, means[i], covs[i]) for i in range(len(weights))])


def _floor_cov(C, floor):
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    C = (vecs * np.maximum(vals, floor)) @ vecs.T
    return 0.5 * (C + C.T)


def _kmeanspp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2) / total, rng.random(), side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def fit_gmm(data, k: int, max_iter: int = 500, tol: float = 1e-10, seed: int = 0) -> GmmModel:
    """Fit a k-component mixture by EM from k-means++ seeded means.

    Covariances start at the pooled covariance and every estimate has its
    eigenvalues floored at ``1e-6`` times the mean data variance. A component
    whose responsibility mass drops below 1e-8 is re-seeded on the worst-fit
    sample (``reinitialized`` is then set and a warning issued).
    """
    X = as_matrix(data)
    n, m = X.shape
    if k < 1:
        raise RankError("k must be at least 1")
    if k > n:
        raise RankError(f"k={k} exceeds the number of samples n={n}")
    rng = np.random.default_rng(seed)
    mu0 = X.mean(axis=0)
    pooled = (X - mu0).T @ (X - mu0) / n
    floor = 1e-6 * max(float(np.mean(np.diag(pooled))), 1e-300)

    weights = np.full(k, 1.0 / k)
    means = _kmeanspp(X, k, rng)
    covs = np.array([_floor_cov(pooled, floor) for _ in range(k)])

    logp = _weighted_logpdf(X, weights, means, covs)
    ll = float(np.sum(logsumexp(logp, axis=1)))
    trace = [ll]
    converged = reinit = False
    it = 0
    for it in range(1, max_iter + 1):
        log_resp = logp - logsumexp(logp, axis=1, keepdims=True)
        resp = np.exp(log_resp)
        Nk = resp.sum(axis=0)
        collapsed = np.flatnonzero(Nk < DEGENERATE_MASS)
        for i in collapsed:
            worst = int(np.argmin(logsumexp(logp, axis=1)))
            resp[:, i] = 0.0
            resp[worst] = 0.0
            resp[worst, i] = 1.0
            reinit = True
            warnings.warn(f"component {i} collapsed; re-seeded", ConvergenceWarning, stacklevel=2)
        Nk = resp.sum(axis=0)
        weights = Nk / n
        means = (resp.T @ X) / Nk[:, None]
        covs = np.empty((k, m, m))
        for i in range(k):
            D = X - means[i]
            C = (resp[:, i, None] * D).T @ D / Nk[i]
            covs[i] = _floor_cov(pooled if i in collapsed else C, floor)

        logp = _weighted_logpdf(X, weights, means, covs)
        ll_new = float(np.sum(logsumexp(logp, axis=1)))
        trace.append(ll_new)
        if abs(ll_new - ll) <= tol * max(abs(ll), 1.0):
            converged = True
            break
        ll = ll_new

    return GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        loglik_trace=np.array(trace),
        converged=converged,
        n_iter=it,
        reinitialized=reinit,
    )


def gmm_responsibilities(model: GmmModel, data) -> np.ndarray:
    """Posterior component probabilities; rows sum to one."""
    X, single = rows(data, model.m, "GMM")
    logp = _weighted_logpdf(X, model.weights, model.means, model.covariances)
    resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
    return resp[0] if single else resp


def gmm_loglik(model: GmmModel, data) -> float:
    """Total log-likelihood ``sum_j log p(x_j)``."""
    X, _ = rows(data, model.m, "GMM")
    logp = _weighted_logpdf(X, model.weights, model.means, model.covariances)
    return float(np.sum(logsumexp(logp, axis=1)))
