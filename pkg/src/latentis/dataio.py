"""Tabular data ingestion, normalization and model persistence.

Model files are single JSON documents ``{"format_version", "kind", "payload"}``.
Arrays are stored as lists of ``float.hex`` strings so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DataError, DimensionError, ModelFormatError, ModelKindError

FORMAT_VERSION = 1

_MODEL_KINDS: dict[str, type] = {}


def model_kind(kind: str):
    """Class decorator registering a dataclass as a persistable model kind."""

    def register(cls):
        if kind in _MODEL_KINDS and _MODEL_KINDS[kind] is not cls:
            raise ValueError(f"model kind {kind!r} registered twice")
        cls.kind = kind
        _MODEL_KINDS[kind] = cls
        return cls

    return register


@dataclass(frozen=True)
class Dataset:
    """Samples-by-variables matrix with variable names.

    ``values`` is stored as a read-only float64 copy.
    """

    values: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f"expected a 2-D matrix, got shape {values.shape}")
        n, m = values.shape
        if n < 1 or m < 1:
            raise DataError("dataset must have at least one row and one column")
        if not np.all(np.isfinite(values)):
            raise DataError("dataset contains NaN or infinite values")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(m))
        if len(names) != m:
            raise DataError(f"{len(names)} names given for {m} columns")
        if len(set(names)) != m:
            raise DataError("variable names must be distinct")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def columns(self, names: Sequence[str]) -> "Dataset":
        """Sub-dataset holding the named columns, in the given order."""
        missing = [c for c in names if c not in self.names]
        if missing:
            raise DataError(f"unknown column(s): {', '.join(missing)}")
        idx = [self.names.index(c) for c in names]
        return Dataset(self.values[:, idx], tuple(names))

    def drop(self, names: Sequence[str]) -> "Dataset":
        keep = [c for c in self.names if c not in set(names)]
        return self.columns(keep)


def as_matrix(data, ndim: int = 2) -> np.ndarray:
    """Float array view of a Dataset or array-like."""
    if isinstance(data, Dataset):
        return data.values
    arr = np.asarray(data, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr[:, None]
    return arr


def load_csv(path, header: bool = True) -> Dataset:
    """Read a numeric CSV file into a :class:`Dataset`.

    Rows and columns in error messages are 1-based and count the header line.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")

    names: tuple[str, ...] = ()
    first_line = 1
    if header:
        names = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
        first_line = 2
        if not rows:
            raise DataError(f"{path} has a header but no data rows")

    width = len(names) if header else len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = first_line + i
        if len(row) != width:
            raise DataError(f"row {line} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric cell {cell.strip()!r} at row {line}, column {j + 1}"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"non-finite cell {cell.strip()!r} at row {line}, column {j + 1}")
            values[i, j] = v
    return Dataset(values, names)


def write_csv(path, header: Sequence[str], rows) -> None:
    """Write rows atomically; an exception leaves no file behind."""
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class atomic_write:
    """Context manager writing to a temp file that replaces ``path`` on success."""

    def __init__(self, path, mode: str = "w"):
        self.path = os.fspath(path)
        self.mode = mode

    def __enter__(self):
        directory = os.path.dirname(os.path.abspath(self.path))
        fd, self._tmp = tempfile.mkstemp(dir=directory, prefix=".latentis-", suffix=".tmp")
        self._fh = os.fdopen(fd, self.mode, newline="" if "b" not in self.mode else None,
                             encoding=None if "b" in self.mode else "utf-8")
        return self._fh

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            os.unlink(self._tmp)
        return False


# -- scaling ------------------------------------------------------------------


@model_kind("scaler")
@dataclass(frozen=True)
class Scaler:
    """Column-wise standardization with n-1 standard deviations.

    Constant columns keep ``std = 1`` and are flagged in ``constant``.
    """

    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray

    @property
    def m(self) -> int:
        return len(self.means)


def fit_scaler(data) -> Scaler:
    X = as_matrix(data)
    if X.shape[0] < 2:
        raise DataError("need at least 2 samples to fit a scaler")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    constant = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    stds = np.where(constant, 1.0, stds)
    return Scaler(means, stds, constant)


def apply_scaler(scaler: Scaler, data):
    """Standardize ``data``; returns the same type it was given."""
    X = _check_scaler_dim(scaler, data)
    out = (X - scaler.means) / scaler.stds
    if isinstance(data, Dataset):
        return Dataset(out, data.names)
    return out


def invert_scaler(scaler: Scaler, data):
    X = _check_scaler_dim(scaler, data)
    out = X * scaler.stds + scaler.means
    if isinstance(data, Dataset):
        return Dataset(out, data.names)
    return out


def _check_scaler_dim(scaler, data):
    X = as_matrix(data)
    if X.shape[-1] != scaler.m:
        raise DimensionError(f"scaler fitted on {scaler.m} variables, data has {X.shape[-1]}")
    return X


# -- persistence --------------------------------------------------------------


def _encode(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return {"__float__": float(obj).hex()}
    if isinstance(obj, np.ndarray):
        if obj.dtype == bool:
            data = obj.ravel().tolist()
        elif np.issubdtype(obj.dtype, np.integer):
            data = [int(v) for v in obj.ravel()]
        else:
            data = [float(v).hex() for v in obj.astype(float).ravel()]
        return {"__ndarray__": {"dtype": obj.dtype.str if obj.dtype != bool else "bool",
                                "shape": list(obj.shape), "data": data}}
    if dataclasses.is_dataclass(obj) and getattr(type(obj), "kind", None) in _MODEL_KINDS:
        return {"__model__": type(obj).kind, "fields": _fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, dict):
        return {"__dict__": {str(k): _encode(v) for k, v in obj.items()}}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fields(obj) -> dict:
    return {f.name: _encode(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}


def _decode(obj):
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if not isinstance(obj, dict):
        return obj
    if "__float__" in obj:
        return float.fromhex(obj["__float__"])
    if "__ndarray__" in obj:
        spec = obj["__ndarray__"]
        dtype, shape, data = spec["dtype"], spec["shape"], spec["data"]
        if dtype == "bool":
            arr = np.array(data, dtype=bool)
        elif np.dtype(dtype).kind in "iu":
            arr = np.array(data, dtype=np.dtype(dtype))
        else:
            arr = np.array([float.fromhex(v) for v in data], dtype=np.dtype(dtype))
        return arr.reshape(shape)
    if "__model__" in obj:
        return _build(obj["__model__"], obj["fields"])
    if "__dict__" in obj:
        return {k: _decode(v) for k, v in obj["__dict__"].items()}
    raise ModelFormatError(f"unrecognized encoded object with keys {sorted(obj)}")


def _build(kind: str, fields: dict):
    cls = _MODEL_KINDS.get(kind)
    if cls is None:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    try:
        return cls(**{k: _decode(v) for k, v in fields.items()})
    except TypeError as exc:
        raise ModelFormatError(f"payload does not match {kind}: {exc}") from exc


def _ensure_registry():
    # Importing the model modules populates the kind registry.
    from . import classic_lvm, deep_pls, monitoring  # noqa: F401


def save_model(model, path, meta: dict | None = None) -> None:
    """Write a fitted model (plus optional metadata) as one JSON document."""
    kind = getattr(type(model), "kind", None)
    if kind not in _MODEL_KINDS:
        raise TypeError(f"{type(model).__name__} is not a persistable model")
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "payload": _fields(model),
    }
    if meta:
        doc["meta"] = _encode(dict(meta))["__dict__"]
    with atomic_write(path) as fh:
        json.dump(doc, fh, indent=1)


def load_model(path, kind: str | type | None = None, with_meta: bool = False):
    """Load a model file, optionally insisting on a model kind.

    ``kind`` may be a kind string or a model class. With ``with_meta`` the
    return value is ``(model, meta_dict)``.
    """
    _ensure_registry()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path} is not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or not {"format_version", "kind", "payload"} <= doc.keys():
        raise ModelFormatError(f"{path} lacks format_version/kind/payload")
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path} has format version {doc['format_version']}, expected {FORMAT_VERSION}"
        )
    if kind is not None:
        want = kind if isinstance(kind, str) else getattr(kind, "kind", None)
        if doc["kind"] != want:
            raise ModelKindError(f"{path} holds a {doc['kind']!r} model, expected {want!r}")
    try:
        model = _build(doc["kind"], doc["payload"])
        meta = {k: _decode(v) for k, v in doc.get("meta", {}).items()}
    except (KeyError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"corrupted payload in {path}: {exc}") from exc
    return (model, meta) if with_meta else model
