"""Small float64 feedforward nets with hand-written backprop.

Used for the topology Q-network and the link-weight predictor.  Hidden layers
use ReLU and (optionally) inverted dropout in train mode.  Output layers are
linear unless ``final_activation`` is set, which lets a net act as a shared
trunk whose last layer is itself a hidden layer of a bigger model.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

TRAIN = "train"
INFERENCE = "inference"
_MAGIC = "ccnoc-ffn 1"


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]      # input to each layer (batch, fan_in)
    pre: list[np.ndarray]         # affine outputs
    masks: list[np.ndarray | None]
    output: np.ndarray
    squeeze: bool


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray

    def scaled(self, c: float) -> "Gradients":
        return Gradients([c * w for w in self.weights], [c * b for b in self.biases], c * self.input)


class FeedForwardNet:
    def __init__(self, sizes: Sequence[int], dropout: float = 0.0, seed: int = 0,
                 final_activation: bool = False, zero_init: bool = False):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if not 0 <= dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        self.sizes = [int(s) for s in sizes]
        self.dropout = float(dropout)
        self.seed = int(seed)
        self.final_activation = bool(final_activation)
        init_rng = np.random.default_rng([self.seed, 0])
        self.rng = np.random.default_rng([self.seed, 1])  # dropout masks
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            if zero_init:
                w = np.zeros((fan_out, fan_in))
            else:
                w = init_rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def _activated(self, i: int) -> bool:
        return i < self.n_layers - 1 or self.final_activation

    def forward_cached(self, x, mode: str = INFERENCE) -> ForwardCache:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.shape[1] != self.sizes[0]:
            raise ValueError(f"input length {a.shape[1]} != {self.sizes[0]}")
        inputs, pre, masks = [], [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(a)
            z = a @ w.T + b
            pre.append(z)
            mask = None
            if self._activated(i):
                a = np.maximum(z, 0.0)
                if mode == TRAIN and self.dropout > 0:
                    keep = 1.0 - self.dropout
                    mask = (self.rng.random(a.shape) < keep) / keep
                    a = a * mask
            else:
                a = z
            masks.append(mask)
        return ForwardCache(inputs, pre, masks, a, squeeze)

    def forward(self, x, mode: str = INFERENCE) -> np.ndarray:
        c = self.forward_cached(x, mode)
        return c.output[0] if c.squeeze else c.output

    def backward(self, cache: ForwardCache, grad_out) -> Gradients:
        g = np.asarray(grad_out, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        gw = [None] * self.n_layers
        gb = [None] * self.n_layers
        for i in reversed(range(self.n_layers)):
            if self._activated(i):
                if cache.masks[i] is not None:
                    g = g * cache.masks[i]
                g = g * (cache.pre[i] > 0)
            gw[i] = g.T @ cache.inputs[i]
            gb[i] = g.sum(axis=0)
            g = g @ self.weights[i]
        return Gradients(gw, gb, g[0] if cache.squeeze else g)

    def sgd_step(self, grads: Gradients, lr: float):
        for w, b, dw, db in zip(self.weights, self.biases, grads.weights, grads.biases):
            w -= lr * dw
            b -= lr * db

    # ------------------------------------------------------------ parameters

    def parameters(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b]
        return np.concatenate(parts)

    def set_parameters(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        k = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[k:k + w.size].reshape(w.shape).copy()
            k += w.size
            self.biases[i] = flat[k:k + b.size].copy()
            k += b.size

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "FeedForwardNet":
        other = FeedForwardNet(self.sizes, self.dropout, self.seed, self.final_activation,
                               zero_init=True)
        other.set_parameters(self.parameters())
        other.rng.bit_generator.state = self.rng.bit_generator.state
        return other

    # ------------------------------------------------------------ checkpoints

    def header(self) -> str:
        return (f"{_MAGIC}\nsizes={','.join(map(str, self.sizes))}\nseed={self.seed}\n"
                f"dropout={self.dropout!r}\nfinal_activation={int(self.final_activation)}\n"
                f"params={self.n_params}\n")

    def to_bytes(self) -> bytes:
        return self.header().encode() + b"\n" + self.parameters().astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeedForwardNet":
        head, _, body = data.partition(b"\n\n")
        lines = head.decode().splitlines()
        if not lines or lines[0] != _MAGIC:
            raise ValueError("not a network checkpoint")
        kv = dict(ln.split("=", 1) for ln in lines[1:])
        net = cls([int(s) for s in kv["sizes"].split(",")], float(kv["dropout"]),
                  int(kv["seed"]), bool(int(kv["final_activation"])), zero_init=True)
        params = np.frombuffer(body, dtype="<f8")
        if params.size != int(kv["params"]):
            raise ValueError("truncated checkpoint")
        net.set_parameters(params.astype(np.float64))
        return net

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "FeedForwardNet":
        return cls.from_bytes(Path(path).read_bytes())


def forward(net: FeedForwardNet, x, mode: str = INFERENCE) -> np.ndarray:
    return net.forward(x, mode)


def backward(net: FeedForwardNet, cache: ForwardCache, grad_out) -> Gradients:
    return net.backward(cache, grad_out)


def sgd_step(net: FeedForwardNet, grads: Gradients, lr: float):
    net.sgd_step(grads, lr)


def squared_error(target) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Loss ``sum((y - t)^2)`` and its gradient with respect to ``y``."""
    t = np.asarray(target, dtype=np.float64)

    def loss(y):
        d = y - t
        return float(np.sum(d * d)), 2.0 * d
    return loss


def grad_check(net: FeedForwardNet, x, loss: Callable, h: float = 1e-5) -> float:
    """Max relative error between backprop and central differences (no dropout).

    Relative error per parameter is ``|a - n| / max(|a| + |n|, 1e-8)``.
    """
    cache = net.forward_cached(x, INFERENCE)
    _, g_out = loss(cache.output[0] if cache.squeeze else cache.output)
    grads = net.backward(cache, g_out)
    analytic = np.concatenate([np.concatenate([w.ravel(), b]) for w, b in
                               zip(grads.weights, grads.biases)])
    theta = net.parameters()
    numeric = np.empty_like(theta)
    try:
        for i in range(theta.size):
            orig = theta[i]
            theta[i] = orig + h
            net.set_parameters(theta)
            lp, _ = loss(net.forward(x, INFERENCE))
            theta[i] = orig - h
            net.set_parameters(theta)
            lm, _ = loss(net.forward(x, INFERENCE))
            theta[i] = orig
            numeric[i] = (lp - lm) / (2 * h)
    finally:
        net.set_parameters(theta)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
