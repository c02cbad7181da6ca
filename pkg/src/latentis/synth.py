"""Synthetic data from the generative assumptions of the models.

Randomness comes from :class:`SynthRng`: uniforms from NumPy's PCG64
(``Generator(PCG64(seed)).random()``, 53-bit doubles) and Gaussians by the
Box-Muller transform of consecutive uniform pairs, so a given seed yields the
same stream on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataio import Dataset


class SynthRng:
    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        """Standard normals; pair i uses uniforms (2i, 2i+1) of the stream."""
        count = int(np.prod(size))
        u = self._gen.random(2 * ((count + 1) // 2)).reshape(-1, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
        theta = 2.0 * np.pi * u[:, 1]
        z = np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()
        return z[:count].reshape(size)

    def categorical(self, probs: np.ndarray, size=None) -> np.ndarray:
        cdf = np.cumsum(probs)
        u = self.uniform(size) * cdf[-1]
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(probs) - 1)


@dataclass(frozen=True)
class LinearGaussianSpec:
    """``x = W t + mu + eps`` with ``t ~ N(0, I)`` and ``eps ~ N(0, diag(psi))``."""

    W: np.ndarray
    mu: np.ndarray
    psi: np.ndarray
    n: int
    seed: int = 0
    kind: str = field(default="linear_gaussian", init=False)


@dataclass(frozen=True)
class GmmSpec:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    n: int
    seed: int = 0
    kind: str = field(default="gmm", init=False)


@dataclass(frozen=True)
class HmmSpec:
    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray
    n_sequences: int
    length: int
    seed: int = 0
    kind: str = field(default="hmm", init=False)


@dataclass(frozen=True)
class FaultSpec:
    """A linear-Gaussian plant with a fault from row ``onset`` onward.

    ``mode="shift"`` adds ``magnitude`` standard deviations to the affected
    variables; ``mode="variance"`` multiplies their deviations from the mean
    by ``1 + magnitude``.
    """

    plant: LinearGaussianSpec
    onset: int
    variables: Sequence[int]
    magnitude: float
    mode: str = "shift"
    kind: str = field(default="process_with_fault", init=False)


GeneratorSpec = LinearGaussianSpec | GmmSpec | HmmSpec | FaultSpec


def _names(m):
    return tuple(f"x{j + 1}" for j in range(m))


def gen_linear_gaussian(spec: LinearGaussianSpec) -> tuple[Dataset, np.ndarray]:
    """Observations and the true latent scores."""
    W = np.atleast_2d(np.asarray(spec.W, dtype=float))
    m, k = W.shape
    mu = np.broadcast_to(np.asarray(spec.mu, dtype=float), (m,))
    psi = np.broadcast_to(np.asarray(spec.psi, dtype=float), (m,))
    if np.any(psi < 0) or not np.all(np.isfinite(psi)):
        raise ValueError("noise variances must be finite and non-negative")
    if spec.n < 1:
        raise ValueError("n must be positive")
    rng = SynthRng(spec.seed)
    t = rng.normal((spec.n, k))
    eps = rng.normal((spec.n, m)) * np.sqrt(psi)
    X = t @ W.T + mu + eps
    return Dataset(X, _names(m)), t


def _cov_root(C):
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    if vals.min() < -1e-10 * max(vals.max(), 1.0):
        raise ValueError("covariance is not positive semi-definite")
    return vecs * np.sqrt(np.clip(vals, 0, None))


def gen_gmm(spec: GmmSpec) -> tuple[Dataset, np.ndarray]:
    """Mixture samples and their component labels (ancestral sampling)."""
    w = np.asarray(spec.weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must be a probability vector")
    means = np.atleast_2d(np.asarray(spec.means, dtype=float))
    covs = np.asarray(spec.covariances, dtype=float)
    roots = [_cov_root(C) for C in covs]
    rng = SynthRng(spec.seed)
    labels = rng.categorical(w, spec.n)
    z = rng.normal((spec.n, means.shape[1]))
    X = np.empty_like(z)
    for i, R in enumerate(roots):
        sel = labels == i
        X[sel] = means[i] + z[sel] @ R.T
    return Dataset(X, _names(means.shape[1])), labels


def _check_stochastic(M, name):
    M = np.asarray(M, dtype=float)
    if np.any(M < 0) or np.any(np.abs(M.sum(axis=-1) - 1) > 1e-12):
        raise ValueError(f"{name} must be row-stochastic")
    return M


def gen_hmm(spec: HmmSpec) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Observation and hidden-state sequences."""
    A = _check_stochastic(spec.transition, "transition")
    B = _check_stochastic(spec.emission, "emission")
    pi = _check_stochastic(spec.initial, "initial")
    if spec.length < 1 or spec.n_sequences < 1:
        raise ValueError("need at least one sequence of length >= 1")
    rng = SynthRng(spec.seed)
    obs, states = [], []
    for _ in range(spec.n_sequences):
        u = rng.uniform((spec.length, 2))
        s = np.empty(spec.length, dtype=int)
        o = np.empty(spec.length, dtype=int)
        cdfA, cdfB = np.cumsum(A, axis=1), np.cumsum(B, axis=1)
        s[0] = min(np.searchsorted(np.cumsum(pi), u[0, 0], side="right"), len(pi) - 1)
        for t in range(spec.length):
            if t:
                s[t] = min(np.searchsorted(cdfA[s[t - 1]], u[t, 0], side="right"), len(pi) - 1)
            o[t] = min(np.searchsorted(cdfB[s[t]], u[t, 1], side="right"), B.shape[1] - 1)
        obs.append(o)
        states.append(s)
    return obs, states


def gen_process_with_fault(spec: FaultSpec) -> tuple[Dataset, np.ndarray]:
    """Plant data with a fault injected from ``onset``; returns the row fault mask."""
    data, _ = gen_linear_gaussian(spec.plant)
    n, m = data.n, data.m
    if not 0 <= spec.onset < n:
        raise ValueError(f"onset {spec.onset} outside [0, {n})")
    cols = np.asarray(spec.variables, dtype=int)
    if cols.size and (cols.min() < 0 or cols.max() >= m or len(set(cols)) != len(cols)):
        raise ValueError("fault variables must be distinct column indices")
    if spec.mode not in ("shift", "variance"):
        raise ValueError(f"unknown fault mode {spec.mode!r}")
    W = np.atleast_2d(np.asarray(spec.plant.W, dtype=float))
    psi = np.broadcast_to(np.asarray(spec.plant.psi, dtype=float), (m,))
    mu = np.broadcast_to(np.asarray(spec.plant.mu, dtype=float), (m,))
    sd = np.sqrt(np.sum(W**2, axis=1) + psi)
    X = np.array(data.values)
    if spec.mode == "shift":
        X[spec.onset :, cols] += spec.magnitude * sd[cols]
    else:
        X[spec.onset :, cols] = mu[cols] + (X[spec.onset :, cols] - mu[cols]) * (1 + spec.magnitude)
    mask = np.arange(n) >= spec.onset
    return Dataset(X, data.names), mask


def random_plant(m: int, k: int, n: int, seed: int = 0, noise: float = 0.1,
                 plant_seed: int | None = None) -> LinearGaussianSpec:
    """A plant with N(0, 1) loadings, zero mean and isotropic noise ``noise``.

    Loadings come from ``plant_seed`` (default: ``seed``) and the samples from
    ``seed``, so one plant can produce several independent data sets.
    """
    ps = seed if plant_seed is None else plant_seed
    W = SynthRng(ps + 7919).normal((m, k))
    return LinearGaussianSpec(W=W, mu=np.zeros(m), psi=np.full(m, noise), n=n, seed=seed)


def generate(spec: GeneratorSpec):
    """Dispatch on the spec type."""
    if isinstance(spec, FaultSpec):
        return gen_process_with_fault(spec)
    if isinstance(spec, LinearGaussianSpec):
        return gen_linear_gaussian(spec)
    if isinstance(spec, GmmSpec):
        return gen_gmm(spec)
    if isinstance(spec, HmmSpec):
        return gen_hmm(spec)
    raise TypeError(f"unsupported generator spec {type(spec).__name__}")
