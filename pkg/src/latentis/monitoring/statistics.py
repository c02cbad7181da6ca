"""Per-sample monitoring statistics for PCA and ICA models.

All functions take samples as rows (a vector or an n x m matrix) and return
one value per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..classic_lvm import IcaModel, PcaModel
from ..classic_lvm._common import rows
from ..errors import RankError

KINDS = ("T2", "QT", "I2", "QI")
EIGEN_FLOOR = 1e-12


@dataclass(frozen=True)
class StatisticSeries:
    values: np.ndarray
    layer: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0):
            raise ValueError("monitoring statistics must be non-negative")
        object.__setattr__(self, "values", v)


def _out(v, single):
    return float(v[0]) if single else v


def t2_statistic(model: PcaModel, x):
    """Hotelling ``T^2 = t^T Lambda_k^-1 t`` with ``t = P_p^T (x - mean)``."""
    lam = model.eigenvalues[: model.k]
    if lam[-1] <= EIGEN_FLOOR * max(lam[0], 1e-300) or lam[-1] <= 0:
        raise RankError("a retained eigenvalue is too small for a stable T^2")
    X, single = rows(x, model.m, "PCA model")
    t = (X - model.mean) @ model.loadings_p
    return _out(np.sum(t**2 / lam, axis=1), single)


def spe_statistic(model: PcaModel, x):
    """Squared prediction error ``|x - P_p P_p^T x|^2`` (Q statistic)."""
    X, single = rows(x, model.m, "PCA model")
    Xc = X - model.mean
    E = Xc - (Xc @ model.loadings_p) @ model.loadings_p.T
    return _out(np.sum(E**2, axis=1), single)


def i2_statistic(model: IcaModel, x):
    """``I^2 = s^T s`` with ``s = W (x - mean)``."""
    X, single = rows(x, model.m, "ICA model")
    S = (X - model.mean) @ model.separating.T
    return _out(np.sum(S**2, axis=1), single)


def qi_statistic(model: IcaModel, x):
    """ICA reconstruction error ``|x - A s|^2``."""
    X, single = rows(x, model.m, "ICA model")
    Xc = X - model.mean
    E = Xc - (Xc @ model.separating.T) @ model.mixing.T
    return _out(np.sum(E**2, axis=1), single)
