"""Small feed-forward networks with hand-written backpropagation and Adam."""
from __future__ import annotations

import numpy as np

ACTIVATIONS = ("relu", "linear", "sigmoid", "tanh")


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _act(kind, z):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _act_grad(kind, z, a, g):
    if kind == "relu":
        return g * (z > 0)
    if kind == "sigmoid":
        return g * a * (1.0 - a)
    if kind == "tanh":
        return g * (1.0 - a * a)
    return g


class NetCore:
    """Fully connected network ``sizes[0] -> ... -> sizes[-1]``.

    ``activations[i]`` applies after layer ``i``. Parameters live in
    ``self.params`` as ``[W0, b0, W1, b1, ...]`` so optimizers and gradient
    checks can treat them uniformly.
    """

    def __init__(self, sizes, activations, rng: np.random.Generator):
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.activations = tuple(activations)
        self.params = []
        for fan_in, fan_out, act in zip(self.sizes[:-1], self.sizes[1:], self.activations):
            gain = 2.0 if act == "relu" else 1.0
            bound = np.sqrt(3.0 * gain / fan_in)
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.params.append(np.zeros(fan_out))

    @property
    def n_layers(self):
        return len(self.activations)

    def forward(self, x):
        """Return the output and the cache ``backward`` needs."""
        cache = [x]
        a = x
        for i, act in enumerate(self.activations):
            z = a @ self.params[2 * i] + self.params[2 * i + 1]
            a = _act(act, z)
            cache.append((z, a))
        return a, cache

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss w.r.t. every parameter and the input."""
        grads = [None] * len(self.params)
        g = grad_out
        for i in range(self.n_layers - 1, -1, -1):
            z, a = cache[i + 1]
            g = _act_grad(self.activations[i], z, a, g)
            a_prev = cache[0] if i == 0 else cache[i][1]
            grads[2 * i] = a_prev.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g

    def all_finite(self):
        return all(np.all(np.isfinite(p)) for p in self.params)


class Adam:
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        self.params = params
        self.lr, self.betas, self.eps = lr, betas, eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.betas
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if self.weight_decay:
                g = g + self.weight_decay * p
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def bce_with_logits(logits, targets):
    """Mean binary cross-entropy and its gradient w.r.t. the logits."""
    loss = np.maximum(logits, 0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    grad = (sigmoid(logits) - targets) / logits.shape[0]
    return float(loss.mean()), grad
