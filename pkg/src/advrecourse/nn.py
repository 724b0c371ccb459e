"""Forward/backward passes for the small feed-forward binary classifiers.

Everything is float64 numpy. Hidden layers use ReLU (subgradient 0 at 0),
the output unit is a sigmoid, and the loss is binary cross entropy with
probabilities clamped to [1e-7, 1 - 1e-7] before the log. Gradients are
exact reverse-mode, available with respect to parameters and inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-7


@dataclass
class Gradients:
    """Reverse-mode gradients of the BCE loss for one instance."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]
    input_grad: np.ndarray


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(p: float, y: int) -> float:
    """Binary cross entropy -[y ln p + (1-y) ln(1-p)], p clamped away from {0,1}."""
    p = min(max(float(p), PROB_CLAMP), 1.0 - PROB_CLAMP)
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def bce_losses(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized BCE over a batch."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def _check_input(model, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    d = model.layer_dims[0]
    if X.shape[-1] != d:
        raise ValueError(
            f"input has {X.shape[-1]} features, model expects {d}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    return X


def _forward_cache(model, X: np.ndarray):
    """Run the net on a batch, keeping activations and pre-activations."""
    acts = [X]
    pre = []
    a = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        pre.append(z)
        a = sigmoid(z) if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts, pre


def predict_proba(model, X: np.ndarray) -> np.ndarray:
    """P(y=1) for a batch of rows, shape (n,)."""
    X = _check_input(model, np.atleast_2d(X))
    acts, _ = _forward_cache(model, X)
    return acts[-1][:, 0]


def predict(model, X: np.ndarray) -> np.ndarray:
    """Hard labels at the 0.5 threshold, shape (n,)."""
    return (predict_proba(model, X) >= 0.5).astype(np.int64)


def forward(model, x: np.ndarray) -> float:
    """Sigmoid output P(y=1) for a single feature vector."""
    x = _check_input(model, x)
    if x.ndim != 1:
        raise ValueError(f"forward expects a 1-D vector, got shape {x.shape}")
    return float(predict_proba(model, x[None, :])[0])


def _backprop(model, acts, pre, delta_out):
    """Shared reverse pass. delta_out is dLoss/dz at the output, shape (n, 1).

    Returns per-layer weight/bias grads (summed over the batch) and the
    per-instance input gradient (n, d).
    """
    n_layers = len(model.weights)
    wgrads = [None] * n_layers
    bgrads = [None] * n_layers
    g = delta_out
    for i in range(n_layers - 1, -1, -1):
        wgrads[i] = acts[i].T @ g
        bgrads[i] = g.sum(axis=0)
        g = g @ model.weights[i].T
        if i > 0:
            g = g * (pre[i - 1] > 0)
    return wgrads, bgrads, g


def backward(model, x: np.ndarray, y: int) -> Gradients:
    """Exact gradients of bce_loss(forward(model, x), y) w.r.t. params and x."""
    x = _check_input(model, x)
    if x.ndim != 1:
        raise ValueError(f"backward expects a 1-D vector, got shape {x.shape}")
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    acts, pre = _forward_cache(model, x[None, :])
    p = acts[-1]
    delta = p - float(y)  # dBCE/dz through the sigmoid
    wgrads, bgrads, ginput = _backprop(model, acts, pre, delta)
    return Gradients(wgrads, bgrads, ginput[0])


def batch_param_grads(model, X: np.ndarray, y: np.ndarray):
    """Mean-loss parameter gradients over a batch; returns (wgrads, bgrads)."""
    X = _check_input(model, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    acts, pre = _forward_cache(model, X)
    delta = (acts[-1] - y) / X.shape[0]
    wgrads, bgrads, _ = _backprop(model, acts, pre, delta)
    return wgrads, bgrads


def param_grads_weighted(model, X: np.ndarray, y: np.ndarray,
                         sample_weight: np.ndarray):
    """Parameter gradients of sum_i w_i * BCE_i; caller normalizes the weights."""
    X = _check_input(model, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    w = np.asarray(sample_weight, dtype=np.float64).reshape(-1, 1)
    acts, pre = _forward_cache(model, X)
    delta = (acts[-1] - y) * w
    wgrads, bgrads, _ = _backprop(model, acts, pre, delta)
    return wgrads, bgrads


def input_grads(model, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-instance dBCE/dx for a batch, shape (n, d)."""
    X = _check_input(model, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    acts, pre = _forward_cache(model, X)
    delta = acts[-1] - y
    _, _, g = _backprop(model, acts, pre, delta)
    return g


def prob_grads(model, X: np.ndarray) -> np.ndarray:
    """Per-instance dP(y=1)/dx for a batch, shape (n, d)."""
    X = _check_input(model, np.atleast_2d(X))
    acts, pre = _forward_cache(model, X)
    p = acts[-1]
    delta = p * (1.0 - p)  # dp/dz at the output unit
    _, _, g = _backprop(model, acts, pre, delta)
    return g
