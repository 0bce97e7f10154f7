"""Multilayer perceptron trained with Adam on binary cross-entropy.

ReLU hidden layers, single sigmoid output. Backpropagation and the Adam
update are written out explicitly so gradients can be checked against
finite differences. With no hidden layers the network reduces to logistic
regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatchError, EmptyDatasetError, NonFiniteLossError


def init_params(layer_sizes, rng) -> list:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = np.zeros(fan_out, dtype=np.float64)
        params.append([W, b])
    return params


def forward(params, X):
    """Returns (per-layer post-activation list, output logits)."""
    acts = [np.asarray(X, dtype=np.float64)]
    h = acts[0]
    for i, (W, b) in enumerate(params):
        z = h @ W + b
        if i < len(params) - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            return acts, z[:, 0]
    raise AssertionError("unreachable: params is never empty")


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grads(params, X, y):
    """Mean binary cross-entropy and its gradients w.r.t. every parameter.

    Uses the logit-form loss max(z,0) - z*y + log(1+exp(-|z|)) so large
    margins cannot overflow.
    """
    y = np.asarray(y, dtype=np.float64)
    acts, z = forward(params, X)
    n = len(y)
    loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))

    grads = [[None, None] for _ in params]
    delta = ((_sigmoid(z) - y) / n)[:, None]  # d loss / d z, shape (n, 1)
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        grads[i][0] = acts[i].T @ delta
        grads[i][1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W.T) * (acts[i] > 0.0)
    return loss, grads


@dataclass
class AdamState:
    """First/second-moment accumulators matching the parameter shapes."""

    m: list
    v: list
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m=[[np.zeros_like(W), np.zeros_like(b)] for W, b in params],
            v=[[np.zeros_like(W), np.zeros_like(b)] for W, b in params],
            learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps,
        )


def adam_step(state: AdamState, params, grads):
    """One bias-corrected Adam update, in place. Zero gradients are a fixed point."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for layer, (m_layer, v_layer, g_layer) in enumerate(zip(state.m, state.v, grads)):
        for j in range(2):
            g = g_layer[j]
            m_layer[j] *= b1
            m_layer[j] += (1.0 - b1) * g
            v_layer[j] *= b2
            v_layer[j] += (1.0 - b2) * g * g
            m_hat = m_layer[j] / correction1
            v_hat = v_layer[j] / correction2
            params[layer][j] -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class NetworkModel:
    layer_sizes: list
    params: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.layer_sizes[0]

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"model expects {self.n_features} features, got {X.shape[1]}"
            )
        _, z = forward(self.params, X)
        return _sigmoid(z)


def fit_mlp(X, y, hidden_sizes=(32,), epochs=50, batch_size=32,
            learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
            seed=0) -> NetworkModel:
    """Train with mini-batch Adam; shuffle order is fixed by the seed.

    Raises NonFiniteLossError (with epoch/batch context) if the loss ever
    leaves the finite range.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyDatasetError("cannot fit an MLP on zero examples")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    layer_sizes = [X.shape[1], *hidden_sizes, 1]
    rng = np.random.default_rng(seed)
    params = init_params(layer_sizes, rng)
    state = AdamState.for_params(params, learning_rate=learning_rate,
                                 beta1=beta1, beta2=beta2, eps=eps)
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            loss, grads = loss_and_grads(params, X[batch], y[batch])
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss {loss} at epoch {epoch}, batch offset {start}"
                )
            adam_step(state, params, grads)
    return NetworkModel(layer_sizes=layer_sizes, params=params)
