"""Fully-connected binary classifier: ReLU hidden layers, sigmoid output,
cross-entropy loss, minibatch SGD.

The epoch-end loss checkpoints are kept non-increasing (within 1e-6): an
epoch whose full-data loss rises is rolled back and retried at half the
learning rate, so the recorded path is monotone while defaults stay as
configured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteLoss
from ..seeding import derive_seed
from .logistic import sigmoid

_EPS = 1e-12


@dataclass(frozen=True)
class NeuralParams:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    loss_history: tuple[float, ...]


def init_params(n_features: int, hidden: tuple[int, ...], seed: int) -> NeuralParams:
    """He-initialized weights for the ReLU stack, zero biases."""
    rng = np.random.default_rng(derive_seed(seed, "nn-init"))
    sizes = (n_features, *hidden, 1)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NeuralParams(weights=tuple(weights), biases=tuple(biases), loss_history=())


def _forward(params: NeuralParams, X: np.ndarray):
    activations = [X]
    pre = []
    a = X
    last = len(params.weights) - 1
    for layer, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ W + b
        pre.append(z)
        a = sigmoid(z) if layer == last else np.maximum(z, 0.0)
        activations.append(a)
    return pre, activations


def loss_and_grad(params: NeuralParams, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and gradients for all weights and biases."""
    n = len(X)
    pre, acts = _forward(params, X)
    p = acts[-1][:, 0]
    p_clipped = np.clip(p, _EPS, 1.0 - _EPS)
    loss = float(-np.mean(y * np.log(p_clipped) + (1.0 - y) * np.log(1.0 - p_clipped)))

    grads_w = [np.empty_like(W) for W in params.weights]
    grads_b = [np.empty_like(b) for b in params.biases]
    # Sigmoid + cross-entropy collapse to (p - y) at the output.
    delta = ((p - y) / n)[:, None]
    for layer in range(len(params.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer].T) * (pre[layer - 1] > 0.0)
    return loss, NeuralParams(tuple(grads_w), tuple(grads_b), ())


def flatten_params(params: NeuralParams):
    """Flatten to one vector plus an inverse mapping (for finite differences)."""
    parts = [*params.weights, *params.biases]
    shapes = [p.shape for p in parts]
    flat = np.concatenate([p.ravel() for p in parts])
    n_weights = len(params.weights)

    def unflatten(vector: np.ndarray) -> NeuralParams:
        out = []
        offset = 0
        for shape in shapes:
            size = int(np.prod(shape))
            out.append(vector[offset:offset + size].reshape(shape))
            offset += size
        return NeuralParams(tuple(out[:n_weights]), tuple(out[n_weights:]), ())

    return flat, unflatten


def _full_loss(weights, biases, X, y) -> float:
    a = X
    last = len(weights) - 1
    for i in range(last):
        a = np.maximum(a @ weights[i] + biases[i], 0.0)
    p = sigmoid((a @ weights[last] + biases[last])[:, 0])
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def fit(X, y, hidden: tuple[int, ...], learning_rate: float, epochs: int,
        batch: int, seed: int, tolerance: float = 1e-6) -> NeuralParams:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(X)
    init = init_params(X.shape[1], tuple(hidden), seed)
    weights = [W.copy() for W in init.weights]
    biases = [b.copy() for b in init.biases]
    n_layers = len(weights)
    rng = np.random.default_rng(derive_seed(seed, "nn-shuffle"))
    lr = learning_rate

    loss = _full_loss(weights, biases, X, y)
    history = [loss]
    for _ in range(epochs):
        checkpoint = ([W.copy() for W in weights], [b.copy() for b in biases])
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            xb = X[rows]
            yb = y[rows]
            acts = [xb]
            a = xb
            for i in range(n_layers - 1):
                a = np.maximum(a @ weights[i] + biases[i], 0.0)
                acts.append(a)
            p = sigmoid((a @ weights[-1] + biases[-1])[:, 0])
            delta = ((p - yb) / len(rows))[:, None]
            for layer in range(n_layers - 1, -1, -1):
                grad_w = acts[layer].T @ delta
                grad_b = delta.sum(axis=0)
                if layer > 0:
                    delta = delta @ weights[layer].T
                    delta *= acts[layer] > 0.0
                weights[layer] -= lr * grad_w
                biases[layer] -= lr * grad_b
        new_loss = _full_loss(weights, biases, X, y)
        if not np.isfinite(new_loss):
            raise NonFiniteLoss("neural network loss became non-finite")
        if new_loss > loss + tolerance:
            weights, biases = checkpoint
            lr *= 0.5
            if lr < 1e-10:
                break
            continue
        loss = new_loss
        history.append(loss)
    return NeuralParams(
        tuple(W.copy() for W in weights), tuple(b.copy() for b in biases), tuple(history)
    )


def predict_proba(params: NeuralParams, X) -> np.ndarray:
    _, acts = _forward(params, np.asarray(X, dtype=np.float64))
    return acts[-1][:, 0]
