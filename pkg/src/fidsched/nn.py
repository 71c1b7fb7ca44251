"""Small feed-forward networks with hand-written backpropagation and Adam."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch


@dataclass
class MlpParams:
    """Weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]``; tanh between layers."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> MlpParams:
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def set_flat(self, vec: np.ndarray) -> None:
        i = 0
        for a in self.arrays():
            a[...] = vec[i:i + a.size].reshape(a.shape)
            i += a.size

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_mlp(sizes, rng: np.random.Generator, out_scale: float = 0.01) -> MlpParams:
    """Scaled-normal init; the output layer is shrunk by ``out_scale`` (0 gives a zero layer)."""
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
        if k == len(sizes) - 2:
            w *= out_scale
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns the output and the list of layer inputs needed by :func:`backward`."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.weights[0].shape[0]:
        raise ShapeMismatch(f"input has {x.shape[-1]} features, network expects "
                            f"{params.weights[0].shape[0]}")
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if k < last:
            h = np.tanh(h)
            acts.append(h)
    return h, acts


def backward(params: MlpParams, acts: list[np.ndarray], dout: np.ndarray) -> MlpParams:
    """Gradient of ``sum(dout * output)`` with respect to every parameter."""
    gw: list[np.ndarray] = [None] * len(params.weights)
    gb: list[np.ndarray] = [None] * len(params.biases)
    g = dout
    for k in range(len(params.weights) - 1, -1, -1):
        a = acts[k]
        gw[k] = a.T @ g
        gb[k] = g.sum(axis=0)
        if k > 0:
            g = (g @ params.weights[k].T) * (1.0 - a * a)
    return MlpParams(gw, gb)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class Adam:
    def __init__(self, params: MlpParams, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for a in params.arrays()]
        self.v = [np.zeros_like(a) for a in params.arrays()]

    def step(self, params: MlpParams, grads: MlpParams) -> None:
        if self.lr == 0.0:
            return
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params.arrays(), grads.arrays(), self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Sgd:
    def __init__(self, params: MlpParams, lr: float):
        self.lr = lr

    def step(self, params: MlpParams, grads: MlpParams) -> None:
        if self.lr == 0.0:
            return
        for p, g in zip(params.arrays(), grads.arrays()):
            p -= self.lr * g


def make_optimizer(kind: str, params: MlpParams, lr: float):
    if kind == "adam":
        return Adam(params, lr)
    if kind == "sgd":
        return Sgd(params, lr)
    raise ValueError(f"unknown optimizer {kind!r}")
