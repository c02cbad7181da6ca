"""Bayesian transformation of statistics and consistency-weighted fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import model_kind
from .kde import ControlLimit


@model_kind("fusion_params")
@dataclass(frozen=True)
class FusionParams:
    """Fusion settings.

    mu: outlier damping in the likelihoods; delta: significance level and
    fault prior; eta: down-weight for inconsistent layers (its inverse is
    the up-weight); window: number of recent samples, the current one
    included, averaged for the consistency check.
    """

    mu: float = 1.0
    delta: float = 0.01
    eta: float = 0.01
    window: int = 10

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if int(self.window) != self.window or self.window < 1:
            raise ValueError("window must be a positive integer")


def bayes_posterior(S, limit, params: FusionParams):
    """Fault posterior ``P(F|x)`` of a statistic value against its control limit.

    With ``P(x|F) = exp(-mu L/S)``, ``P(x|N) = exp(-mu S/L)`` and priors
    ``delta``/``1 - delta`` this equals
    ``delta / (delta + (1 - delta) exp(mu (L/S - S/L)))``, which is exactly
    ``delta`` at ``S = L`` and 0 at ``S = 0``.
    """
    L = np.asarray(limit.limit if isinstance(limit, ControlLimit) else limit, dtype=float)
    s = np.asarray(S, dtype=float)
    d = params.delta
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        r = np.where(s > 0, L / s - s / L, np.inf)
        p = d / (d + (1.0 - d) * np.exp(params.mu * r))
    p = np.where(s > 0, p, 0.0)
    return float(p) if p.ndim == 0 else p


def _weighted(current: np.ndarray, history, params: FusionParams) -> float:
    current = np.asarray(current, dtype=float).ravel()
    if current.size == 0:
        raise ValueError("nothing to fuse")
    prev = np.asarray(history if history is not None else [], dtype=float)
    prev = prev.reshape(-1, current.size)[-(params.window - 1):] if params.window > 1 else prev[:0]
    mean = (prev.sum(axis=0) + current) / (len(prev) + 1)
    consistent = (current >= params.delta) & (mean >= params.delta)
    w = np.where(consistent, 1.0 / params.eta, params.eta)
    lo, hi = current.min(), current.max()
    if lo == hi:
        return float(lo)
    # a convex combination; clip away rounding past the input range
    return float(np.clip(np.sum(w * current) / np.sum(w), lo, hi))


def weight_and_fuse(posteriors, history, params: FusionParams) -> float:
    """Deep Bayesian statistic from one posterior per layer.

    ``history`` holds earlier posteriors of the same stream, one row per
    sample, oldest first. The consistency mean covers the current sample plus
    up to ``window - 1`` previous ones; at stream start it averages whatever
    is there.
    """
    return _weighted(posteriors, history, params)


def fuse_odbs(dbs_values, history, params: FusionParams) -> float:
    """Overall statistic from the per-kind deep statistics.

    The inputs are already probabilities, so only the weighting rule is
    applied.
    """
    return _weighted(dbs_values, history, params)
