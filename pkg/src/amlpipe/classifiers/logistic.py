"""L2-regularized logistic regression trained by full-batch gradient descent.

The recorded loss path is kept non-increasing (within 1e-6) by backtracking:
if a step would raise the loss, it is retried with a halved learning rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteLoss

_EPS = 1e-12


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LogisticParams:
    weights: np.ndarray
    bias: float
    loss_history: tuple[float, ...]


def loss_and_grad(weights, bias, X, y, l2):
    """Mean cross-entropy plus (l2/2)*||w||^2 (bias unpenalized), with its
    analytic gradient."""
    w = np.asarray(weights, dtype=np.float64)
    p = sigmoid(X @ w + bias)
    p_clipped = np.clip(p, _EPS, 1.0 - _EPS)
    n = len(y)
    loss = -np.mean(y * np.log(p_clipped) + (1.0 - y) * np.log(1.0 - p_clipped))
    loss += 0.5 * l2 * float(w @ w)
    residual = p - y
    grad_w = X.T @ residual / n + l2 * w
    grad_b = float(residual.mean())
    return float(loss), grad_w, grad_b


def fit(X, y, learning_rate: float, iterations: int, l2: float,
        tolerance: float = 1e-6) -> LogisticParams:
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    lr = learning_rate
    loss, grad_w, grad_b = loss_and_grad(w, b, X, y, l2)
    history = [loss]
    for _ in range(iterations):
        while True:
            w_new = w - lr * grad_w
            b_new = b - lr * grad_b
            new_loss, new_gw, new_gb = loss_and_grad(w_new, b_new, X, y, l2)
            if not np.isfinite(new_loss):
                raise NonFiniteLoss("logistic regression loss became non-finite")
            if new_loss <= loss + tolerance or lr < 1e-12:
                break
            lr *= 0.5
        w, b, loss, grad_w, grad_b = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)
    return LogisticParams(weights=w, bias=b, loss_history=tuple(history))


def predict_proba(params: LogisticParams, X) -> np.ndarray:
    return sigmoid(X @ params.weights + params.bias)
