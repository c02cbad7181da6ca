"""Deep PLS: cascaded PLS layers supervised by the same target at every layer.

Layer 1 fits PLS on (X, Y); layer l fits PLS on (U^(l-1), Y) where U^(l-1)
are the X-side scores of the previous layer. The generalized form passes each
layer input through a fixed nonlinear map first. A least-squares head maps the
top-layer scores to Y. Fitting and prediction are forward-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .classic_lvm import PlsModel, fit_pls, pls_transform
from .classic_lvm._common import rows
from .dataio import as_matrix, model_kind
from .errors import DimensionError, RankError

MAPPING_KINDS = ("identity", "tanh_expand", "random_fourier", "polynomial2")
TASKS = ("regression", "classification")


@model_kind("mapping")
@dataclass(frozen=True)
class MappingSpec:
    """A deterministic feature map; random kinds draw their weights from ``seed``.

    ``output_dim`` is the width for ``tanh_expand`` and ``random_fourier``;
    identity and polynomial2 widths follow from the input. ``gamma`` is the
    random-feature frequency scale.
    """

    kind: str = "identity"
    output_dim: int = 0
    seed: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in MAPPING_KINDS:
            raise ValueError(f"unknown mapping kind {self.kind!r}")
        if self.kind in ("tanh_expand", "random_fourier") and self.output_dim < 1:
            raise ValueError(f"{self.kind} needs a positive output_dim")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def nonlinear_map(spec: MappingSpec, X) -> np.ndarray:
    """Apply a mapping to the rows of ``X``."""
    Xm = as_matrix(X)
    if not np.all(np.isfinite(Xm)):
        raise ValueError("mapping input must be finite")
    n, m = Xm.shape
    if spec.kind == "identity":
        return Xm
    if spec.kind == "polynomial2":
        pairs = list(combinations_with_replacement(range(m), 2))
        quad = np.column_stack([Xm[:, i] * Xm[:, j] for i, j in pairs])
        return np.hstack([Xm, quad])
    rng = np.random.default_rng([spec.seed, m])
    s = spec.output_dim
    if spec.kind == "tanh_expand":
        Omega = rng.standard_normal((m, s)) / np.sqrt(m)
        b = rng.standard_normal(s)
        return np.tanh(Xm @ Omega + b)
    Omega = rng.standard_normal((m, s)) * np.sqrt(2.0 * spec.gamma)
    b = rng.uniform(0.0, 2.0 * np.pi, s)
    return np.sqrt(2.0 / s) * np.cos(Xm @ Omega + b)


@model_kind("dpls")
@dataclass(frozen=True)
class DplsModel:
    """Stacked PLS layers plus the least-squares head on the top-layer scores.

    For classification ``class_labels`` lists the label of each target column.
    """

    layers: list
    head: np.ndarray
    y_mean: np.ndarray
    task: str = "regression"
    class_labels: np.ndarray | None = None

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a deep PLS model needs at least one layer")
        for l in range(1, len(self.layers)):
            if self.layers[l].m != self.layers[l - 1].k:
                raise ValueError(f"layer {l + 1} input width does not match layer {l} scores")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_ks(self) -> list[int]:
        return [p.k for p in self.layers]


@model_kind("gdpls")
@dataclass(frozen=True)
class GdplsModel:
    """Deep PLS with a mapping before every PLS layer."""

    mappings: list
    layers: list
    head: np.ndarray
    y_mean: np.ndarray
    task: str = "regression"
    class_labels: np.ndarray | None = None
    input_dim: int = 0

    def __post_init__(self):
        if not self.layers or len(self.mappings) != len(self.layers):
            raise ValueError("need one mapping per PLS layer")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_ks(self) -> list[int]:
        return [p.k for p in self.layers]


@dataclass(frozen=True)
class CovarianceProfile:
    values: np.ndarray

    def is_non_decreasing(self, atol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.values) >= -atol))


def encode_targets(Y, task: str):
    """Target matrix and class labels; 1-D labels are one-hot encoded."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    Ym = np.asarray(Y)
    if task == "regression":
        return as_matrix(Ym).astype(float), None
    if Ym.ndim == 1 or (Ym.ndim == 2 and Ym.shape[1] == 1):
        labels, idx = np.unique(Ym.ravel(), return_inverse=True)
        onehot = np.zeros((len(idx), len(labels)))
        onehot[np.arange(len(idx)), idx] = 1.0
        return onehot, labels
    return Ym.astype(float), np.arange(Ym.shape[1])


def _stack(inputs_fn, X, Y, depth, layer_ks):
    ks = list(layer_ks) if isinstance(layer_ks, Sequence) else [int(layer_ks)] * depth
    if len(ks) != depth:
        raise ValueError(f"layer_ks needs {depth} entries, got {len(ks)}")
    layers = []
    cur = X
    for l in range(depth):
        H = inputs_fn(l, cur)
        try:
            pls = fit_pls(H, Y, ks[l])
        except RankError as exc:
            raise RankError(f"layer {l + 1}: {exc}; achievable depth is {l}") from exc
        if pls.k == 0:
            raise RankError(f"layer {l + 1} extracted no components; achievable depth is {l}")
        layers.append(pls)
        cur = pls.x_scores
    return layers, cur


def _head(U, Y):
    Yc = Y - Y.mean(axis=0)
    return np.linalg.lstsq(U, Yc, rcond=None)[0], Y.mean(axis=0)


def fit_dpls(X, Y, depth: int, layer_ks, task: str = "regression") -> DplsModel:
    """Fit ``depth`` cascaded PLS layers with ``layer_ks`` components each."""
    Xm = as_matrix(X)
    Ym, labels = encode_targets(Y, task)
    if len(Xm) != len(Ym):
        raise DimensionError(f"X has {len(Xm)} rows, Y has {len(Ym)}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    layers, U = _stack(lambda l, cur: cur, Xm, Ym, depth, layer_ks)
    head, y_mean = _head(U, Ym)
    return DplsModel(layers=layers, head=head, y_mean=y_mean, task=task, class_labels=labels)


def fit_gdpls(X, Y, depth: int, mappings: Sequence[MappingSpec], layer_ks,
              task: str = "regression") -> GdplsModel:
    """Generalized deep PLS: layer l fits PLS on ``phi_l(previous scores)``."""
    Xm = as_matrix(X)
    Ym, labels = encode_targets(Y, task)
    if len(Xm) != len(Ym):
        raise DimensionError(f"X has {len(Xm)} rows, Y has {len(Ym)}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    mappings = list(mappings)
    if len(mappings) != depth:
        raise ValueError(f"need {depth} mapping specs, got {len(mappings)}")
    layers, U = _stack(lambda l, cur: nonlinear_map(mappings[l], cur), Xm, Ym, depth, layer_ks)
    head, y_mean = _head(U, Ym)
    return GdplsModel(mappings=mappings, layers=layers, head=head, y_mean=y_mean, task=task,
                      class_labels=labels, input_dim=Xm.shape[1])


def top_scores(model, X) -> np.ndarray:
    """Scores of the last layer for new data."""
    gen = isinstance(model, GdplsModel)
    m = model.input_dim if gen else model.layers[0].m
    cur, _ = rows(X, m, "deep PLS model")
    for l, pls in enumerate(model.layers):
        H = nonlinear_map(model.mappings[l], cur) if gen else cur
        cur = pls_transform(pls, H)
    return cur


def _decode(model, Yh, single):
    if model.task == "classification":
        out = model.class_labels[np.argmax(Yh, axis=1)]
    else:
        out = Yh
    return out[0] if single else out


def dpls_predict(model, X, raw: bool = False):
    """Predictions (or class labels) from a DPLS or GDPLS model.

    With ``raw`` classification models return the continuous target scores
    instead of labels. Ties between class scores go to the lowest label.
    """
    single = np.asarray(X).ndim == 1
    Yh = top_scores(model, X) @ model.head + model.y_mean
    if raw or model.task == "regression":
        return Yh[0] if single else Yh
    return _decode(model, Yh, single)


gdpls_predict = dpls_predict


def covariance_profile(model, X, Y) -> CovarianceProfile:
    """``cov(u_1, v_1)`` of every layer, ``(1/n) u_1^T v_1`` on centered blocks."""
    gen = isinstance(model, GdplsModel)
    m = model.input_dim if gen else model.layers[0].m
    cur, _ = rows(X, m, "deep PLS model")
    Ym, _ = encode_targets(Y, model.task)
    if len(Ym) != len(cur):
        raise DimensionError(f"X has {len(cur)} rows, Y has {len(Ym)}")
    Yc = Ym - Ym.mean(axis=0)
    n = len(cur)
    vals = []
    for l, pls in enumerate(model.layers):
        H = nonlinear_map(model.mappings[l], cur) if gen else cur
        Hc = H - H.mean(axis=0)
        u1 = Hc @ pls.x_weights[:, 0]
        v1 = Yc @ pls.y_weights[:, 0]
        vals.append(float(u1 @ v1) / n)
        cur = pls_transform(pls, H)
    return CovarianceProfile(np.array(vals))
