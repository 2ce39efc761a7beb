"""Closed-form regressors: mean baseline, OLS, ridge, PCR, PLSR.

All solvers go through orthogonal decompositions (numpy lstsq/SVD); none of
them iterate except the NIPALS loop of PLSR, which is the classical power
iteration with a 1e-10 convergence tolerance.
"""

from __future__ import annotations

import numpy as np

from .base import BaseRegressor, check_X_y


class DummyRegressor(BaseRegressor):
    """Predicts the training-label mean; the baseline every model must beat."""

    kind = "dummy"

    def _fit(self, X, y):
        self.mean_ = float(y.mean())

    def _predict(self, X):
        return np.full(X.shape[0], self.mean_)

    def _param_blocks(self):
        return [("mean", np.array([self.mean_]))]

    def _restore_blocks(self, blocks):
        self.mean_ = float(blocks["mean"][0])


class LinearRegressor(BaseRegressor):
    """Ordinary least squares via SVD-based lstsq (minimum-norm on singular
    systems, with ``metadata['rank_deficient']`` flagging that fallback)."""

    kind = "linear"

    def _fit(self, X, y):
        A = np.hstack([np.ones((X.shape[0], 1)), X])
        sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        self.intercept_ = float(sol[0])
        self.coef_ = sol[1:]
        if rank < A.shape[1]:
            self.metadata["rank_deficient"] = True

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_

    def _param_blocks(self):
        return [("coef", self.coef_), ("intercept", np.array([self.intercept_]))]

    def _restore_blocks(self, blocks):
        self.coef_ = blocks["coef"]
        self.intercept_ = float(blocks["intercept"][0])


class RidgeRegressor(BaseRegressor):
    """L2-penalized least squares with an unpenalized intercept.

    Solved as the augmented system ``[[Xc], [sqrt(alpha) I]] w = [[yc], [0]]``
    on centered data, so ``alpha = 0`` reduces exactly to OLS.
    """

    kind = "ridge"

    def __init__(self, alpha: float = 1.0, seed: int = 0):
        super().__init__(seed)
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        self.alpha = float(alpha)

    def get_params(self):
        return {"alpha": self.alpha, "seed": self.seed}

    def _fit(self, X, y):
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
        d = X.shape[1]
        A = np.vstack([Xc, np.sqrt(self.alpha) * np.eye(d)])
        b = np.concatenate([yc, np.zeros(d)])
        self.coef_, _, _, _ = np.linalg.lstsq(A, b, rcond=None)
        self.intercept_ = float(y_mean - x_mean @ self.coef_)

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_

    def _param_blocks(self):
        return [("coef", self.coef_), ("intercept", np.array([self.intercept_]))]

    def _restore_blocks(self, blocks):
        self.coef_ = blocks["coef"]
        self.intercept_ = float(blocks["intercept"][0])


class PCRRegressor(BaseRegressor):
    """Principal component regression: center X, project onto the top-k right
    singular vectors, regress y on the scores."""

    kind = "pcr"

    def __init__(self, n_components: int = 1, seed: int = 0):
        super().__init__(seed)
        if n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {n_components}")
        self.n_components = int(n_components)

    def get_params(self):
        return {"n_components": self.n_components, "seed": self.seed}

    def _fit(self, X, y):
        n, d = X.shape
        if self.n_components > min(n, d):
            raise ValueError(
                f"n_components={self.n_components} exceeds min(n_samples, n_features)={min(n, d)}"
            )
        x_mean = X.mean(axis=0)
        Xc = X - x_mean
        _, _, vt = np.linalg.svd(Xc, full_matrices=False)
        components = vt[: self.n_components]
        scores = Xc @ components.T
        gamma, _, _, _ = np.linalg.lstsq(scores, y - y.mean(), rcond=None)
        self.coef_ = components.T @ gamma
        self.intercept_ = float(y.mean() - x_mean @ self.coef_)

    def _predict(self, X):
        return X @ self.coef_ + self.intercept_

    def _param_blocks(self):
        return [("coef", self.coef_), ("intercept", np.array([self.intercept_]))]

    def _restore_blocks(self, blocks):
        self.coef_ = blocks["coef"]
        self.intercept_ = float(blocks["intercept"][0])


class PLSRegressor(BaseRegressor):
    """Partial least squares (PLS1) fit by NIPALS with deflation on X only.

    Each component's weight vector is refined by the classical power loop
    until it moves less than ``tol`` (or ``max_iter`` is hit); the final
    regression vector is ``W (P'W)^-1 q`` on centered data.
    """

    kind = "plsr"

    def __init__(self, n_components: int = 1, tol: float = 1e-10, max_iter: int = 500, seed: int = 0):
        super().__init__(seed)
        if n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {n_components}")
        self.n_components = int(n_components)
        self.tol = float(tol)
        self.max_iter = int(max_iter)

    def get_params(self):
        return {
            "n_components": self.n_components,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
        }

    def _fit(self, X, y):
        n, d = X.shape
        if self.n_components > min(n, d):
            raise ValueError(
                f"n_components={self.n_components} exceeds min(n_samples, n_features)={min(n, d)}"
            )
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(y.mean())
        Xa = X - self.x_mean_
        yc = y - self.y_mean_

        W, P, Q = [], [], []
        for _ in range(self.n_components):
            w = Xa.T @ yc
            norm = np.linalg.norm(w)
            if norm < 1e-15:  # no covariance left to model
                break
            w = w / norm
            for _ in range(self.max_iter):
                t = Xa @ w
                tt = t @ t
                if tt < 1e-30:
                    break
                q = (yc @ t) / tt
                u = yc * q
                w_new = Xa.T @ u
                w_norm = np.linalg.norm(w_new)
                if w_norm < 1e-15:
                    break
                w_new = w_new / w_norm
                if np.linalg.norm(w_new - w) < self.tol:
                    w = w_new
                    break
                w = w_new
            t = Xa @ w
            tt = t @ t
            if tt < 1e-30:
                break
            p = Xa.T @ t / tt
            q = float(yc @ t / tt)
            W.append(w)
            P.append(p)
            Q.append(q)
            Xa = Xa - np.outer(t, p)

        if not W:
            self.coef_ = np.zeros(d)
        else:
            Wm = np.column_stack(W)
            Pm = np.column_stack(P)
            qv = np.array(Q)
            self.coef_ = Wm @ np.linalg.solve(Pm.T @ Wm, qv)
        self.effective_components_ = len(W)

    def _predict(self, X):
        return (X - self.x_mean_) @ self.coef_ + self.y_mean_

    def _param_blocks(self):
        return [
            ("x_mean", self.x_mean_),
            ("y_mean", np.array([self.y_mean_])),
            ("coef", self.coef_),
        ]

    def _restore_blocks(self, blocks):
        self.x_mean_ = blocks["x_mean"]
        self.y_mean_ = float(blocks["y_mean"][0])
        self.coef_ = blocks["coef"]
        self.effective_components_ = None
