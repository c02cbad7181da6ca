"""Factor analysis fitted by expectation-maximization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import as_matrix, model_kind
from ..errors import RankError
from ._common import rows, sym_eig_desc

LOG_2PI = np.log(2.0 * np.pi)


@model_kind("fa")
@dataclass(frozen=True)
class FaModel:
    """Fitted factor model ``x = W t + mu + eps`` with ``eps ~ N(0, diag(Psi))``.

    ``Psi_floored`` marks noise variances held at the lower floor by the
    M-step (Heywood cases).
    """

    W: np.ndarray
    mu: np.ndarray
    Psi: np.ndarray
    loglik_trace: np.ndarray
    converged: bool = True
    n_iter: int = 0
    Psi_floored: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.W.shape[1]

    @property
    def m(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class FaEmState:
    """Posterior moments of the latent factors for one E-step.

    ``Ett[i] - outer(Et[i], Et[i]) == G`` for every sample.
    """

    G: np.ndarray
    Et: np.ndarray
    Ett: np.ndarray
    S: np.ndarray


def _loglik(S: np.ndarray, W: np.ndarray, Psi: np.ndarray, n: int) -> float:
    C = W @ W.T + np.diag(Psi)
    L = np.linalg.cholesky(C)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    Linv = np.linalg.solve(L, np.eye(len(Psi)))
    trace = np.sum((Linv @ S) * Linv)
    return -0.5 * n * (len(Psi) * LOG_2PI + logdet + trace)


def _posterior(Xc, W, Psi):
    WtPinv = W.T / Psi
    G = np.linalg.inv(np.eye(W.shape[1]) + WtPinv @ W)
    G = 0.5 * (G + G.T)
    Et = Xc @ (WtPinv.T @ G)
    return G, Et


def fit_fa(data, k: int, max_iter: int = 1000, tol: float = 1e-9) -> FaModel:
    """Fit a k-factor model by EM.

    Iterates until the relative log-likelihood change drops below ``tol``.
    Noise variances are floored at ``1e-6`` times the mean data variance,
    which keeps each M-step a constrained maximizer so the trace stays
    monotone.
    """
    X = as_matrix(data)
    n, m = X.shape
    if not 1 <= k <= m:
        raise RankError(f"k={k} out of range 1..{m}")
    if n < 2:
        raise ValueError("factor analysis needs at least 2 samples")

    mu = X.mean(axis=0)
    Xc = X - mu
    S = Xc.T @ Xc / n
    mean_var = float(np.mean(np.diag(S)))
    if mean_var <= 0:
        raise ValueError("data has zero variance")
    floor = 1e-6 * mean_var

    vals, vecs = sym_eig_desc(S)
    sigma2 = float(np.mean(vals[k:])) if k < m else 0.1 * mean_var
    W = vecs[:, :k] * np.sqrt(np.maximum(vals[:k] - sigma2, floor))
    Psi = np.maximum(np.diag(S) - np.sum(W**2, axis=1), floor)

    ll = _loglik(S, W, Psi, n)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        G, Et = _posterior(Xc, W, Psi)
        sum_ett = n * G + Et.T @ Et
        W = np.linalg.solve(sum_ett.T, (Xc.T @ Et).T).T
        Psi = np.diag(S - W @ (Et.T @ Xc) / n).copy()
        Psi = np.maximum(Psi, floor)
        ll_new = _loglik(S, W, Psi, n)
        trace.append(ll_new)
        if abs(ll_new - ll) < tol * abs(ll):
            converged = True
            break
        ll = ll_new

    return FaModel(
        W=W,
        mu=mu,
        Psi=Psi,
        loglik_trace=np.array(trace),
        converged=converged,
        n_iter=it,
        Psi_floored=Psi <= floor,
    )


def fa_loglik(model: FaModel, data) -> float:
    """Gaussian log-likelihood of ``data`` under the fitted marginal."""
    X, _ = rows(data, model.m, "FA model")
    Xc = X - model.mu
    return _loglik(Xc.T @ Xc / len(X), model.W, model.Psi, len(X))


def fa_e_step(model: FaModel, data) -> FaEmState:
    X, _ = rows(data, model.m, "FA model")
    Xc = X - model.mu
    G, Et = _posterior(Xc, model.W, model.Psi)
    Ett = G[None, :, :] + Et[:, :, None] * Et[:, None, :]
    return FaEmState(G=G, Et=Et, Ett=Ett, S=Xc.T @ Xc / len(X))


def fa_infer(model: FaModel, x) -> np.ndarray:
    """Posterior mean of the factors, ``G W^T Psi^-1 (x - mu)``, row-wise."""
    X, single = rows(x, model.m, "FA model")
    _, Et = _posterior(X - model.mu, model.W, model.Psi)
    return Et[0] if single else Et
