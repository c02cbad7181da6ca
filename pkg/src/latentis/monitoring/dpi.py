"""Deep PCA-ICA (DPI) fault detector.

Training stacks PCA on PCA scores and ICA on ICA sources, seeding the ICA
chain with the first-layer PCA residual. Every layer contributes four
statistics (T2, QT from the PCA branch, I2, QI from the ICA branch), each with
its own KDE control limit. At detection time each statistic is turned into a
fault posterior, the posteriors of one kind are fused across layers into a
deep Bayesian statistic (DBS), and the four DBS values are fused into the
overall statistic (ODBS).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..classic_lvm import (
    IcaModel,
    PcaModel,
    fit_ica,
    fit_pca,
    ica_sources,
    pca_residual,
    pca_transform,
)
from ..dataio import as_matrix, model_kind
from ..errors import DimensionError, RankError
from .fusion import FusionParams, bayes_posterior, fuse_odbs, weight_and_fuse
from .kde import MIN_SAMPLES, ControlLimit, kde_control_limit
from .statistics import KINDS, i2_statistic, qi_statistic, spe_statistic, t2_statistic


@model_kind("dpi")
@dataclass(frozen=True)
class DeepDetector:
    """Layered PCA/ICA models with one control limit per (layer, statistic).

    ``limits[l][j]`` is the limit of statistic ``KINDS[j]`` at layer ``l``.
    """

    pca_layers: list
    ica_layers: list
    limits: list
    params: FusionParams

    def __post_init__(self):
        L = len(self.pca_layers)
        if L < 1 or len(self.ica_layers) != L or len(self.limits) != L:
            raise ValueError("detector needs matching PCA, ICA and limit layers")
        if any(len(row) != len(KINDS) for row in self.limits):
            raise ValueError("every layer needs one limit per statistic kind")
        for l in range(1, L):
            if self.pca_layers[l].m != self.pca_layers[l - 1].k:
                raise ValueError(f"PCA layer {l + 1} input does not match layer {l} output")
            if self.ica_layers[l].m != self.ica_layers[l - 1].k:
                raise ValueError(f"ICA layer {l + 1} input does not match layer {l} output")

    @property
    def depth(self) -> int:
        return len(self.pca_layers)

    @property
    def m(self) -> int:
        return self.pca_layers[0].m

    def limit_values(self) -> np.ndarray:
        """Control limits as a (depth, 4) array."""
        return np.array([[c.limit for c in row] for row in self.limits])


@dataclass
class StreamState:
    """Recent posteriors and DBS values of one monitored stream."""

    window: int
    posteriors: deque = field(default=None)
    dbs: deque = field(default=None)

    def __post_init__(self):
        if self.posteriors is None:
            self.posteriors = deque(maxlen=max(self.window - 1, 0))
        if self.dbs is None:
            self.dbs = deque(maxlen=max(self.window - 1, 0))


@dataclass(frozen=True)
class DetectionRecord:
    posteriors: np.ndarray  # (depth, 4)
    dbs: np.ndarray  # (4,), ordered as KINDS
    odbs: float
    is_fault: bool


def _per_layer(value, depth, name):
    if value is None or np.isscalar(value):
        return [value] * depth
    value = list(value)
    if len(value) != depth:
        raise ValueError(f"{name} needs {depth} entries, got {len(value)}")
    return value


def build_dpi(
    train,
    depth: int = 3,
    cpv: float = 0.9,
    k_pca: int | Sequence[int] | None = None,
    k_ica: int | Sequence[int] | None = None,
    params: FusionParams | None = None,
    seed: int = 0,
    ica_max_iter: int = 200,
) -> DeepDetector:
    """Train a DPI detector on normal-operation data (already normalized).

    PCA widths follow ``k_pca`` when given, otherwise the cumulative-percent-
    variance rule ``cpv``. ICA widths are ``min(k_ica, d - 1)`` with ``d`` the
    rank of the layer input (at least 1). PCA widths are capped at ``d - 1``
    the same way. Keeping one dimension out of each subspace leaves the
    residual statistics QT and QI non-degenerate.
    """
    params = params or FusionParams()
    X = as_matrix(train)
    n, m = X.shape
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} training samples, got {n}")
    k_pca_l = _per_layer(k_pca, depth, "k_pca")
    k_ica_l = _per_layer(k_ica, depth, "k_ica")

    pcas, icas, limits = [], [], []
    p_in = X
    i_in = None
    i_rank = 0
    for l in range(depth):
        pca = fit_pca(p_in, k=k_pca_l[l], cpv=None if k_pca_l[l] else cpv)
        d = p_in.shape[1]
        if d > 1 and pca.k > d - 1:
            pca = fit_pca(p_in, k=d - 1)
        if l == 0:
            i_in = pca_residual(pca, X)
            i_rank = m - pca.k
        if i_rank < 1:
            raise RankError(
                f"ICA branch has no residual dimensions at layer {l + 1}; "
                f"achievable depth is {l}"
            )
        cap = k_ica_l[l] if k_ica_l[l] else i_rank
        k = max(1, min(cap, i_rank - 1))
        ica = fit_ica(i_in.T, k, max_iter=ica_max_iter, seed=seed + l)

        stats = [
            t2_statistic(pca, p_in),
            spe_statistic(pca, p_in),
            i2_statistic(ica, i_in),
            qi_statistic(ica, i_in),
        ]
        limits.append([kde_control_limit(s, params.delta) for s in stats])
        pcas.append(pca)
        icas.append(ica)
        p_in = pca_transform(pca, p_in)
        i_in = ica_sources(ica, i_in.T).T
        i_rank = k
    return DeepDetector(pcas, icas, limits, params)


def dpi_features(detector: DeepDetector, X) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-layer PCA scores and ICA sources (samples as rows) for ``X``."""
    Xm = as_matrix(X)
    if Xm.shape[1] != detector.m:
        raise DimensionError(f"detector expects {detector.m} variables, got {Xm.shape[1]}")
    T, S = [], []
    p_in = Xm
    i_in = pca_residual(detector.pca_layers[0], Xm)
    for pca, ica in zip(detector.pca_layers, detector.ica_layers):
        p_in = pca_transform(pca, p_in)
        i_in = ica_sources(ica, i_in.T).T
        T.append(p_in)
        S.append(i_in)
    return T, S


def dpi_statistics(detector: DeepDetector, X) -> np.ndarray:
    """Monitoring statistics as an (n, depth, 4) array, kinds ordered as ``KINDS``."""
    Xm = as_matrix(X)
    if Xm.shape[1] != detector.m:
        raise DimensionError(f"detector expects {detector.m} variables, got {Xm.shape[1]}")
    out = np.empty((len(Xm), detector.depth, len(KINDS)))
    p_in = Xm
    i_in = pca_residual(detector.pca_layers[0], Xm)
    for l, (pca, ica) in enumerate(zip(detector.pca_layers, detector.ica_layers)):
        out[:, l, 0] = t2_statistic(pca, p_in)
        out[:, l, 1] = spe_statistic(pca, p_in)
        out[:, l, 2] = i2_statistic(ica, i_in)
        out[:, l, 3] = qi_statistic(ica, i_in)
        p_in = pca_transform(pca, p_in)
        i_in = ica_sources(ica, i_in.T).T
    return out


def dpi_posteriors(detector: DeepDetector, X) -> np.ndarray:
    """Fault posteriors for every (sample, layer, kind)."""
    stats = dpi_statistics(detector, X)
    lim = detector.limit_values()
    return bayes_posterior(stats, lim[None, :, :], detector.params)


def _fuse(detector: DeepDetector, post: np.ndarray, state: StreamState) -> DetectionRecord:
    params = detector.params
    hist = np.array(state.posteriors).reshape(-1, *post.shape)
    dbs = np.array([weight_and_fuse(post[:, j], hist[:, :, j], params) for j in range(len(KINDS))])
    odbs = fuse_odbs(dbs, np.array(state.dbs).reshape(-1, len(KINDS)), params)
    state.posteriors.append(post)
    state.dbs.append(dbs)
    return DetectionRecord(posteriors=post, dbs=dbs, odbs=odbs, is_fault=odbs >= params.delta)


def new_stream(detector: DeepDetector) -> StreamState:
    return StreamState(window=detector.params.window)


def detect(detector: DeepDetector, x_t, state: StreamState) -> DetectionRecord:
    """Score one normalized sample and advance the stream state."""
    x = as_matrix(x_t, ndim=0)
    if x.ndim != 1:
        raise DimensionError("detect takes a single sample; use detect_batch for matrices")
    post = dpi_posteriors(detector, x[None, :])[0]
    return _fuse(detector, post, state)


def detect_batch(detector: DeepDetector, X, state: StreamState | None = None) -> dict:
    """Run :func:`detect` over the rows of ``X`` in order.

    Returns arrays ``posteriors`` (n, depth, 4), ``dbs`` (n, 4), ``odbs`` (n,)
    and ``is_fault`` (n,).
    """
    state = state or new_stream(detector)
    post = dpi_posteriors(detector, X)
    recs = [_fuse(detector, p, state) for p in post]
    return {
        "posteriors": post,
        "dbs": np.array([r.dbs for r in recs]).reshape(len(recs), len(KINDS)),
        "odbs": np.array([r.odbs for r in recs]),
        "is_fault": np.array([r.is_fault for r in recs], dtype=bool),
    }
