"""Shared regressor plumbing: input checks, metadata, save/load dispatch."""

from __future__ import annotations

import numpy as np

from .io import read_model_file, write_model_file


def check_X_y(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D (n_samples, n_features), got shape {X.shape}")
    if y.ndim != 1:
        raise ValueError(f"y must be 1-D, got shape {y.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X and y disagree on sample count: {X.shape[0]} vs {y.shape[0]}")
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("X and y must be finite")
    return X, y


def check_X(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"expected shape (n, {n_features}), got {X.shape}")
    return X


class BaseRegressor:
    """fit/predict contract shared by every model.

    Subclasses define ``kind``, implement ``_fit``/``_predict``, and expose
    their parameters through ``_param_blocks``/``_restore_blocks`` for the
    binary checkpoint format.
    """

    kind: str = ""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.fitted = False
        self.metadata: dict = {}

    def get_params(self) -> dict:
        return {"seed": self.seed}

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.n_features_ = X.shape[1]
        self.metadata = {"seed": self.seed, "n_samples": X.shape[0], "n_features": X.shape[1]}
        self._fit(X, y)
        self.fitted = True
        return self

    def predict(self, X):
        if not self.fitted:
            raise ValueError(f"{type(self).__name__} is not fitted")
        X = check_X(X, self.n_features_)
        return self._predict(X)

    def save(self, path):
        if not self.fitted:
            raise ValueError("cannot save an unfitted model")
        return write_model_file(path, self.kind, self.get_params(), self.metadata, self._param_blocks())

    @classmethod
    def _from_file(cls, header, blocks):
        params = dict(header["hyperparameters"])
        model = cls(**params)
        model.metadata = dict(header["metadata"])
        model.n_features_ = int(model.metadata["n_features"])
        model._restore_blocks(blocks)
        model.fitted = True
        return model


def load_model(path):
    """Load any saved regressor; dispatches on the header's ``kind``."""
    from . import MODEL_KINDS

    header, blocks = read_model_file(path)
    kind = header.get("kind")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r} in {path}")
    return MODEL_KINDS[kind]._from_file(header, blocks)
