"""Discrete hidden Markov models: likelihood, decoding and Baum-Welch learning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..dataio import model_kind
from ..errors import ImpossibleObservationError

STOCHASTIC_TOL = 1e-12


@model_kind("hmm")
@dataclass(frozen=True)
class HmmModel:
    """``lambda = (A, B, pi)`` with k states and m symbols."""

    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray
    loglik_trace: np.ndarray | None = None
    converged: bool = True

    def __post_init__(self):
        for name in ("transition", "emission"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.ndim != 2 or np.any(M < 0) or np.any(np.abs(M.sum(axis=1) - 1) > STOCHASTIC_TOL):
                raise ValueError(f"{name} must be a row-stochastic matrix")
            object.__setattr__(self, name, M)
        pi = np.asarray(self.initial, dtype=float)
        if np.any(pi < 0) or abs(pi.sum() - 1) > STOCHASTIC_TOL:
            raise ValueError("initial must be a probability vector")
        object.__setattr__(self, "initial", pi)
        k = len(pi)
        if self.transition.shape != (k, k) or self.emission.shape[0] != k:
            raise ValueError("inconsistent HMM dimensions")

    @property
    def state_count(self) -> int:
        return len(self.initial)

    @property
    def symbol_count(self) -> int:
        return self.emission.shape[1]


def _check_obs(model: HmmModel, obs) -> np.ndarray:
    o = np.asarray(obs)
    if o.ndim != 1 or len(o) < 1:
        raise ValueError("observation sequence must be a non-empty 1-D sequence")
    if not np.issubdtype(o.dtype, np.integer):
        if np.any(o != np.round(o)):
            raise ValueError("observations must be integer symbols")
        o = o.astype(int)
    if np.any(o < 0) or np.any(o >= model.symbol_count):
        bad = o[(o < 0) | (o >= model.symbol_count)][0]
        raise ValueError(f"symbol {bad} outside [0, {model.symbol_count})")
    return o


def _forward(A, B, pi, o):
    T, k = len(o), len(pi)
    alpha = np.empty((T, k))
    c = np.empty(T)
    a = pi * B[:, o[0]]
    for t in range(T):
        if t:
            a = (alpha[t - 1] @ A) * B[:, o[t]]
        c[t] = a.sum()
        if c[t] == 0:
            return alpha, c[: t + 1], False
        alpha[t] = a / c[t]
    return alpha, c, True


def hmm_loglik(model: HmmModel, obs) -> float:
    """``log P(O | lambda)`` by the scaled forward recursion (-inf if impossible)."""
    o = _check_obs(model, obs)
    _, c, ok = _forward(model.transition, model.emission, model.initial, o)
    return float(np.sum(np.log(c))) if ok else -np.inf


def hmm_viterbi(model: HmmModel, obs) -> tuple[np.ndarray, float]:
    """Most probable state path and its log probability.

    Ties are resolved toward the lower state index, both when choosing a
    predecessor and when choosing the final state.
    """
    o = _check_obs(model, obs)
    with np.errstate(divide="ignore"):
        logA = np.log(model.transition)
        logB = np.log(model.emission)
        delta = np.log(model.initial) + logB[:, o[0]]
    T, k = len(o), model.state_count
    back = np.zeros((T, k), dtype=int)
    for t in range(1, T):
        scores = delta[:, None] + logA
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(k)] + logB[:, o[t]]
    last = int(np.argmax(delta))
    score = float(delta[last])
    if score == -np.inf:
        raise ImpossibleObservationError("observation sequence has zero probability")
    path = np.empty(T, dtype=int)
    path[-1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score


def hmm_baum_welch(
    sequences: Sequence,
    k: int,
    m: int,
    max_iter: int = 500,
    tol: float = 1e-9,
    seed: int = 0,
    n_init: int = 4,
) -> HmmModel:
    """Learn ``(A, B, pi)`` from a corpus of symbol sequences.

    Each of ``n_init`` restarts begins from Dirichlet(1) random rows (all
    drawn from one generator seeded with ``seed``) and iterates scaled
    forward-backward on every sequence, re-estimating the parameters from the
    pooled expected counts until the relative change of the total
    log-likelihood falls below ``tol``. The restart with the highest final
    log-likelihood is returned along with its own trace; restarts guard
    against the symmetric fixed point where all states share one emission
    row.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    if not sequences:
        raise ValueError("empty corpus")
    probe = HmmModel(np.eye(k), np.full((k, m), 1.0 / m), np.full(k, 1.0 / k))
    seqs = [_check_obs(probe, s) for s in sequences]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        model = _baum_welch_run(seqs, k, m, max_iter, tol, rng)
        if best is None or model.loglik_trace[-1] > best.loglik_trace[-1]:
            best = model
    return best


def _baum_welch_run(seqs, k, m, max_iter, tol, rng) -> HmmModel:
    A = rng.dirichlet(np.ones(k), size=k)
    B = rng.dirichlet(np.ones(m), size=k)
    pi = rng.dirichlet(np.ones(k))

    def e_step(A, B, pi):
        ll = 0.0
        pi_acc = np.zeros(k)
        A_num = np.zeros((k, k))
        B_num = np.zeros((k, m))
        for o in seqs:
            alpha, c, ok = _forward(A, B, pi, o)
            if not ok:
                return -np.inf, None
            ll += float(np.sum(np.log(c)))
            T = len(o)
            beta = np.ones((T, k))
            for t in range(T - 2, -1, -1):
                beta[t] = A @ (B[:, o[t + 1]] * beta[t + 1]) / c[t + 1]
            gamma = alpha * beta
            pi_acc += gamma[0]
            if T > 1:
                emit = B[:, o[1:]].T * beta[1:] / c[1:, None]
                A_num += A * (alpha[:-1].T @ emit)
            np.add.at(B_num.T, o, gamma)
        return ll, (pi_acc, A_num, B_num)

    ll, stats = e_step(A, B, pi)
    trace = [ll]
    converged = False
    for _ in range(max_iter):
        pi_acc, A_num, B_num = stats
        pi = pi_acc / pi_acc.sum()
        rs = A_num.sum(axis=1, keepdims=True)
        A = np.where(rs > 0, A_num / np.where(rs > 0, rs, 1.0), A)
        rs = B_num.sum(axis=1, keepdims=True)
        B = np.where(rs > 0, B_num / np.where(rs > 0, rs, 1.0), B)
        ll_new, stats = e_step(A, B, pi)
        trace.append(ll_new)
        if abs(ll_new - ll) <= tol * max(abs(ll), 1.0):
            converged = True
            break
        ll = ll_new

    A = A / A.sum(axis=1, keepdims=True)
    B = B / B.sum(axis=1, keepdims=True)
    return HmmModel(A, B, pi / pi.sum(), loglik_trace=np.array(trace), converged=converged)
