"""A small fully-connected network trained by mini-batch gradient descent.

The loss is the mean squared error over each batch; gradients come from
plain backpropagation and the update is vanilla gradient descent (no
momentum, no weight decay). Weights initialize to N(0, 1/sqrt(fan_in)) from
the model seed and biases to zero, and the per-epoch shuffle draws from the
same generator, so a rerun with identical inputs is bit-identical.

``gradient_check`` verifies the backward pass against central finite
differences on a small instance; it is part of the public surface and the
test suite's gate on the implementation.
"""

from __future__ import annotations

import numpy as np

from .base import BaseRegressor

_ACTIVATIONS = ("relu", "identity")


class MLPRegressor(BaseRegressor):
    kind = "mlp"

    def __init__(
        self,
        hidden_dims=(16,),
        activation: str = "relu",
        epochs: int = 1000,
        batch_size: int = 32,
        learning_rate: float = 0.01,
        seed: int = 0,
    ):
        super().__init__(seed)
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {activation!r}")
        if epochs < 1 or batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        self.hidden_dims = tuple(int(h) for h in hidden_dims)
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden layer widths must be >= 1")
        self.activation = activation
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.learning_rate = float(learning_rate)

    def get_params(self):
        return {
            "hidden_dims": list(self.hidden_dims),
            "activation": self.activation,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    # -- network plumbing ---------------------------------------------------

    def _init_params(self, n_features, rng):
        dims = [n_features, *self.hidden_dims, 1]
        self.weights_ = []
        self.biases_ = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            self.weights_.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (fan_in, fan_out)))
            self.biases_.append(np.zeros(fan_out))

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z

    def _act_grad(self, z):
        if self.activation == "relu":
            return (z > 0.0).astype(float)
        return np.ones_like(z)

    def _forward(self, X):
        """Returns (per-layer pre-activations, per-layer inputs, output)."""
        zs, inputs = [], []
        a = X
        last = len(self.weights_) - 1
        for l, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            inputs.append(a)
            z = a @ W + b
            zs.append(z)
            a = z if l == last else self._act(z)
        return zs, inputs, a[:, 0]

    def _gradients(self, X, y):
        """Analytic gradient of mean((pred - y)^2) at the current parameters."""
        zs, inputs, pred = self._forward(X)
        n = X.shape[0]
        delta = (2.0 / n) * (pred - y)[:, None]  # dL/dz at the linear output
        gW = [None] * len(self.weights_)
        gb = [None] * len(self.biases_)
        for l in range(len(self.weights_) - 1, -1, -1):
            gW[l] = inputs[l].T @ delta
            gb[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ self.weights_[l].T) * self._act_grad(zs[l - 1])
        loss = float(np.mean((pred - y) ** 2))
        return gW, gb, loss

    # -- training -----------------------------------------------------------

    def _fit(self, X, y):
        rng = np.random.default_rng(self.seed)
        self._init_params(X.shape[1], rng)
        n = X.shape[0]
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                gW, gb, _ = self._gradients(X[batch], y[batch])
                for l in range(len(self.weights_)):
                    self.weights_[l] -= self.learning_rate * gW[l]
                    self.biases_[l] -= self.learning_rate * gb[l]

    def _predict(self, X):
        return self._forward(X)[2]

    def _param_blocks(self):
        blocks = []
        for l, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            blocks.append((f"layer{l}_W", W))
            blocks.append((f"layer{l}_b", b))
        return blocks

    def _restore_blocks(self, blocks):
        n_layers = len(self.hidden_dims) + 1
        self.weights_ = [blocks[f"layer{l}_W"] for l in range(n_layers)]
        self.biases_ = [blocks[f"layer{l}_b"] for l in range(n_layers)]


def gradient_check(model: MLPRegressor, X, y, h: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    Exhaustive over every parameter, so the instance must be small
    (<= 20 samples, <= 8 features). The model's weights are initialized from
    its seed if it has not been fit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] > 20 or X.shape[1] > 8:
        raise ValueError("gradient check is exhaustive; use <= 20 samples and <= 8 features")
    if not hasattr(model, "weights_"):
        model._init_params(X.shape[1], np.random.default_rng(model.seed))
        model.n_features_ = X.shape[1]

    analytic_W, analytic_b, _ = model._gradients(X, y)

    def loss():
        pred = model._forward(X)[2]
        return float(np.mean((pred - y) ** 2))

    worst = 0.0
    for params, grads in ((model.weights_, analytic_W), (model.biases_, analytic_b)):
        for arr, g in zip(params, grads):
            flat = arr.ravel()
            gflat = g.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss()
                flat[i] = orig - h
                down = loss()
                flat[i] = orig
                numeric = (up - down) / (2.0 * h)
                denom = max(abs(gflat[i]), abs(numeric), 1e-8)
                worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
