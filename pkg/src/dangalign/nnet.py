"""Dense numeric kernel: initializers, feed-forward nets with explicit
gradients, and the Adam optimizer.

Parameters are stored in float32; every reduction accumulates in float64.
All functions are dtype-preserving, so tests can run the same code on
float64 shadow copies for finite-difference checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

STORAGE_DTYPE = np.float32

ACTIVATIONS = ("relu", "sigmoid", "identity")


def sum64(x) -> float:
    """Sum with a 64-bit accumulator regardless of storage dtype."""
    return float(np.sum(x, dtype=np.float64))


def xavier_init(rows: int, cols: int, rng: np.random.Generator,
                dtype=STORAGE_DTYPE) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"xavier_init needs rows, cols >= 1, got ({rows}, {cols})")
    bound = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign to stay overflow-free for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d(activation)/dz, from the cached pre-activation z and output a."""
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Layer:
    """One dense layer: out = act(x @ w + b), w is (n_in, n_out)."""

    w: np.ndarray
    b: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.w.ndim != 2 or self.b.ndim != 1 or self.b.shape[0] != self.w.shape[1]:
            raise ValueError(f"incompatible layer shapes {self.w.shape} / {self.b.shape}")


class FeedForwardNet:
    """A stack of dense layers with explicit forward/backward passes."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("a net needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.w.shape[1] != nxt.w.shape[0]:
                raise ValueError(
                    f"layer dims incompatible: {prev.w.shape} -> {nxt.w.shape}")
        self.layers = layers

    @classmethod
    def create(cls, dims: list[int], activations: list[str],
               rng: np.random.Generator, dtype=STORAGE_DTYPE) -> "FeedForwardNet":
        """Build a net with Xavier weights and zero biases.

        dims = [n_in, h1, ..., n_out]; one activation per layer.
        """
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        layers = []
        for i, act in enumerate(activations):
            w = xavier_init(dims[i], dims[i + 1], rng, dtype=dtype)
            b = np.zeros(dims[i + 1], dtype=dtype)
            layers.append(Layer(w, b, act))
        return cls(layers)

    @property
    def n_inputs(self) -> int:
        return self.layers[0].w.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].w.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        """Named parameter tensors; names are stable across calls."""
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layer{i}.w"] = layer.w
            out[f"layer{i}.b"] = layer.b
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            layer.w = params[f"layer{i}.w"]
            layer.b = params[f"layer{i}.b"]

    def astype(self, dtype) -> "FeedForwardNet":
        return FeedForwardNet([
            Layer(l.w.astype(dtype), l.b.astype(dtype), l.activation)
            for l in self.layers
        ])

    def forward(self, x: np.ndarray):
        """Returns (output, cache); accepts a single vector or a batch.

        The cache holds each layer's input, pre-activation and output,
        which is exactly what backward() needs.
        """
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.n_inputs:
            raise ValueError(
                f"input dim {h.shape[1]} does not match net input {self.n_inputs}")
        cache = []
        for layer in self.layers:
            z = h @ layer.w + layer.b
            a = _activate(layer.activation, z)
            cache.append((h, z, a))
            h = a
        if not np.all(np.isfinite(h)):
            raise NumericError("non-finite activations in forward pass")
        return (h[0] if squeeze else h), (cache, squeeze)

    def backward(self, cache, grad_out: np.ndarray):
        """Backprop an upstream gradient through the cached forward pass.

        Returns ({name: grad}, grad_wrt_input) with shapes mirroring
        params() and the forward input.
        """
        steps, squeeze = cache
        if len(steps) != len(self.layers):
            raise ValueError("stale cache: layer count mismatch")
        g = grad_out[None, :] if squeeze else grad_out
        if g.shape != steps[-1][2].shape:
            raise ValueError(
                f"stale cache: output grad shape {g.shape} vs {steps[-1][2].shape}")
        grads: dict[str, np.ndarray] = {}
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            h, z, a = steps[i]
            gz = g * _activation_grad(layer.activation, z, a)
            grads[f"layer{i}.w"] = h.T @ gz
            grads[f"layer{i}.b"] = gz.sum(axis=0, dtype=np.float64).astype(gz.dtype)
            g = gz @ layer.w.T
        return grads, (g[0] if squeeze else g)


@dataclass
class Adam:
    """Adam with bias correction and per-tensor step counts.

    Moments live in slots keyed by tensor name, created lazily, so one
    optimizer can serve tensors that are stepped at different cadences.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: dict = field(default_factory=dict, repr=False)
    _v: dict = field(default_factory=dict, repr=False)
    _t: dict = field(default_factory=dict, repr=False)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update every tensor in `grads` in place."""
        for name, g in grads.items():
            p = params[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for '{name}'")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for tensor '{name}'")
            g = g.astype(p.dtype, copy=False)
            m = self._m.get(name)
            if m is None:
                m = np.zeros_like(p)
                v = np.zeros_like(p)
            else:
                v = self._v[name]
            t = self._t.get(name, 0) + 1
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * (g * g)
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype, copy=False)
            self._m[name], self._v[name], self._t[name] = m, v, t

    def step_count(self, name: str) -> int:
        return self._t.get(name, 0)
