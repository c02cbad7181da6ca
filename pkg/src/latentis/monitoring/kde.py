"""Control limits from a Gaussian kernel density estimate of training statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..dataio import model_kind
from ..errors import ConvergenceWarning
from .statistics import StatisticSeries

MIN_SAMPLES = 30


@model_kind("control_limit")
@dataclass(frozen=True)
class ControlLimit:
    limit: float
    delta: float
    bandwidth: float

    def __post_init__(self):
        if not self.limit > 0:
            raise ValueError(f"control limit must be positive, got {self.limit}")


def silverman_bandwidth(x: np.ndarray) -> float:
    """``0.9 min(sd, IQR/1.34) n^(-1/5)``; falls back to sd when the IQR is 0."""
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * len(x) ** -0.2


def kde_cdf_grid(x: np.ndarray, h: float, grid_size: int = 2048, chunk: int = 128):
    """Grid and trapezoid-integrated CDF of the Gaussian KDE, normalized to end at 1."""
    lo, hi = x.min() - 6.0 * h, x.max() + 6.0 * h
    grid = np.linspace(lo, hi, grid_size)
    dens = np.empty(grid_size)
    for s in range(0, grid_size, chunk):
        u = (grid[s : s + chunk, None] - x[None, :]) / h
        dens[s : s + chunk] = np.exp(-0.5 * u**2).sum(axis=1)
    dens /= len(x) * h * np.sqrt(2.0 * np.pi)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    return grid, cdf / cdf[-1]


def kde_control_limit(stats, delta: float, tol: float = 1e-6, grid_size: int = 2048) -> ControlLimit:
    """The ``1 - delta`` quantile of the KDE fitted to training statistics.

    The quantile is located by bisection on the interpolated CDF inside
    ``[min, max + 3h]`` (widened to the grid end if needed). When all values
    coincide the limit is that value plus a small epsilon and a warning is
    raised.
    """
    x = np.asarray(stats.values if isinstance(stats, StatisticSeries) else stats, dtype=float)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if len(x) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} statistics, got {len(x)}")

    c = float(np.max(x))
    h = silverman_bandwidth(x) if np.ptp(x) > 0 else 0.0
    if h <= 1e-12 * max(abs(c), 1e-300):
        eps = 1e-8 * max(abs(c), 1.0)
        warnings.warn("training statistics are constant; limit set just above them",
                      ConvergenceWarning, stacklevel=2)
        return ControlLimit(limit=c + eps, delta=delta, bandwidth=0.0)

    grid, cdf = kde_cdf_grid(x, h, grid_size)
    target = 1.0 - delta
    a, b = float(x.min()), float(x.max() + 3.0 * h)
    if np.interp(b, grid, cdf) < target:
        b = float(grid[-1])
    width = tol * (b - a)
    while b - a > width:
        mid = 0.5 * (a + b)
        if np.interp(mid, grid, cdf) < target:
            a = mid
        else:
            b = mid
    limit = 0.5 * (a + b)
    if limit <= 0:
        limit = float(np.min(x[x > 0])) if np.any(x > 0) else 1e-12
    return ControlLimit(limit=limit, delta=delta, bandwidth=h)
