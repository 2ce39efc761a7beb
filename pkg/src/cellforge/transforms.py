"""Invertible data transformations for features and labels.

All statistics are global over the whole input tensor (a single mean/sd or
min/max regardless of shape); 'ColumnwiseZScoreDataTransformation' is the
per-column variant for 2-D feature matrices. Transforms are fit once on
training data and then applied to anything of the same shape family;
``inverse_transform(transform(x))`` recovers ``x`` within 1e-9.

Fitted state serializes to plain dicts (JSON-safe) via ``to_dict`` /
``from_dict`` for storage inside pipeline checkpoints.
"""

from __future__ import annotations

import numpy as np


class _Fitted:
    """fit/transform plumbing shared by every transformation."""

    name: str

    def __init__(self):
        self.fitted = False
        self.fit_row_count = 0  # leakage instrumentation: rows seen at fit time

    def _require_fitted(self):
        if not self.fitted:
            raise ValueError(f"{type(self).__name__} is not fitted")

    @staticmethod
    def _as_finite_array(data, *, context):
        arr = np.asarray(data, dtype=float)
        if arr.size == 0:
            raise ValueError(f"cannot {context} on empty data")
        if not np.isfinite(arr).all():
            raise ValueError(f"cannot {context} on non-finite data")
        return arr

    def fit(self, data):
        arr = self._as_finite_array(data, context="fit")
        self._fit(arr)
        self.fitted = True
        self.fit_row_count = arr.shape[0]
        return self

    def transform(self, data):
        self._require_fitted()
        arr = self._as_finite_array(data, context="transform")
        return self._transform(arr)

    def inverse_transform(self, data):
        self._require_fitted()
        arr = np.asarray(data, dtype=float)
        return self._inverse(arr)

    def to_dict(self) -> dict:
        self._require_fitted()
        return {"name": self.name, "state": self._state()}

    @classmethod
    def from_dict(cls, obj: dict) -> "_Fitted":
        name = obj.get("name")
        if name not in _TRANSFORM_CLASSES:
            raise ValueError(f"unknown transformation {name!r}")
        t = _TRANSFORM_CLASSES[name]._restore(obj.get("state", {}))
        t.fitted = True
        return t


class ZScoreDataTransformation(_Fitted):
    """(x - mean) / sd with global statistics (population sd)."""

    name = "ZScoreDataTransformation"

    def _fit(self, arr):
        self.mean_ = float(arr.mean())
        self.std_ = float(arr.std())
        if self.std_ == 0.0:
            raise ValueError("degenerate data: standard deviation is zero")

    def _transform(self, arr):
        return (arr - self.mean_) / self.std_

    def _inverse(self, arr):
        return arr * self.std_ + self.mean_

    def _state(self):
        return {"mean": self.mean_, "std": self.std_}

    @classmethod
    def _restore(cls, state):
        t = cls()
        t.mean_ = float(state["mean"])
        t.std_ = float(state["std"])
        return t


class ColumnwiseZScoreDataTransformation(_Fitted):
    """Per-column z-score for 2-D matrices (1-D data is a single column)."""

    name = "ColumnwiseZScoreDataTransformation"

    def _fit(self, arr):
        if arr.ndim > 2:
            raise ValueError("columnwise z-score expects 1-D or 2-D data")
        self.mean_ = arr.mean(axis=0)
        self.std_ = arr.std(axis=0)
        if np.any(self.std_ == 0.0):
            raise ValueError("degenerate data: a column has zero standard deviation")

    def _transform(self, arr):
        return (arr - self.mean_) / self.std_

    def _inverse(self, arr):
        return arr * self.std_ + self.mean_

    def _state(self):
        return {"mean": np.asarray(self.mean_).tolist(), "std": np.asarray(self.std_).tolist()}

    @classmethod
    def _restore(cls, state):
        t = cls()
        t.mean_ = np.asarray(state["mean"], dtype=float)
        t.std_ = np.asarray(state["std"], dtype=float)
        return t


class MinMaxDataTransformation(_Fitted):
    """(x - min) / (max - min) with global statistics."""

    name = "MinMaxDataTransformation"

    def _fit(self, arr):
        self.min_ = float(arr.min())
        self.max_ = float(arr.max())
        if self.max_ == self.min_:
            raise ValueError("degenerate data: max equals min")

    def _transform(self, arr):
        return (arr - self.min_) / (self.max_ - self.min_)

    def _inverse(self, arr):
        return arr * (self.max_ - self.min_) + self.min_

    def _state(self):
        return {"min": self.min_, "max": self.max_}

    @classmethod
    def _restore(cls, state):
        t = cls()
        t.min_ = float(state["min"])
        t.max_ = float(state["max"])
        return t


class LogScaleDataTransformation(_Fitted):
    """Base-10 logarithm; stateless (fit only records the row count)."""

    name = "LogScaleDataTransformation"

    def _fit(self, arr):
        if np.any(arr <= 0):
            raise ValueError("log scale requires strictly positive data")

    def _transform(self, arr):
        if np.any(arr <= 0):
            raise ValueError("log scale requires strictly positive data")
        return np.log10(arr)

    def _inverse(self, arr):
        return np.power(10.0, arr)

    def _state(self):
        return {}

    @classmethod
    def _restore(cls, state):
        return cls()


class SequentialDataTransformation(_Fitted):
    """Children applied in order; fitting chains each child on the previous
    child's training output, inversion walks the chain backwards."""

    name = "SequentialDataTransformation"

    def __init__(self, transformations=()):
        super().__init__()
        self.transformations = list(transformations)
        if not self.transformations:
            raise ValueError("sequential transformation needs at least one child")

    def _fit(self, arr):
        out = arr
        for t in self.transformations:
            out = t.fit(out).transform(out)

    def _transform(self, arr):
        out = arr
        for t in self.transformations:
            out = t.transform(out)
        return out

    def _inverse(self, arr):
        out = arr
        for t in reversed(self.transformations):
            out = t.inverse_transform(out)
        return out

    def _state(self):
        return {"children": [t.to_dict() for t in self.transformations]}

    @classmethod
    def _restore(cls, state):
        children = [_Fitted.from_dict(c) for c in state["children"]]
        t = cls(transformations=children)
        return t


_TRANSFORM_CLASSES = {
    cls.name: cls
    for cls in (
        ZScoreDataTransformation,
        ColumnwiseZScoreDataTransformation,
        MinMaxDataTransformation,
        LogScaleDataTransformation,
        SequentialDataTransformation,
    )
}


def transform_from_dict(obj: dict) -> _Fitted:
    """Restore any fitted transformation from its ``to_dict`` form."""
    return _Fitted.from_dict(obj)
