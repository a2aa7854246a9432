"""Dense ReLU Q-networks written directly against numpy.

All parameters of a network live in one flat float64 buffer; per-layer
weight matrices ``(n_in, n_out)`` and bias vectors are views into it. That
keeps target-network syncs and Adam updates to a single array operation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError


def parameter_count(layer_sizes: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


def _check_sizes(layer_sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ConfigError(f"need at least input and output sizes, got {sizes}")
    if any(s <= 0 for s in sizes):
        raise ConfigError(f"layer sizes must be positive, got {sizes}")
    return sizes


def _layer_views(buf: np.ndarray, sizes: tuple[int, ...]):
    weights, biases = [], []
    off = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(buf[off : off + n_in * n_out].reshape(n_in, n_out))
        off += n_in * n_out
        biases.append(buf[off : off + n_out])
        off += n_out
    return weights, biases


class QNetwork:
    """MLP with ReLU hidden layers and a linear output layer."""

    def __init__(self, layer_sizes: Sequence[int], params: np.ndarray | None = None):
        self.layer_sizes = _check_sizes(layer_sizes)
        n = parameter_count(self.layer_sizes)
        if params is None:
            params = np.zeros(n)
        elif params.shape != (n,):
            raise ConfigError(f"expected {n} parameters, got shape {params.shape}")
        self.params = np.ascontiguousarray(params, dtype=np.float64)
        self.weights, self.biases = _layer_views(self.params, self.layer_sizes)

    @property
    def n_params(self) -> int:
        return self.params.size

    def _activations(self, x: np.ndarray) -> list[np.ndarray]:
        acts = [x]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = x @ w
            if i < last:
                kernels.bias_relu(z, b)
            else:
                kernels.bias_add(z, b)
            acts.append(z)
            x = z
        return acts

    def forward(self, x) -> np.ndarray:
        """Q-values for one input vector ``(n_in,)`` or a batch ``(B, n_in)``."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        batch = np.ascontiguousarray(x.reshape(1, -1) if single else x)
        if batch.ndim != 2 or batch.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"input has shape {x.shape}, network expects {self.layer_sizes[0]} features")
        out = self._activations(batch)[-1]
        return out[0] if single else out

    def __repr__(self) -> str:
        return f"QNetwork({'-'.join(map(str, self.layer_sizes))}, params={self.n_params})"


def init_network(layer_sizes: Sequence[int], rng: np.random.Generator) -> QNetwork:
    """Uniform(+-sqrt(6 / fan_in)) weights, zero biases."""
    net = QNetwork(layer_sizes)
    for w in net.weights:
        lim = np.sqrt(6.0 / w.shape[0])
        w[...] = rng.uniform(-lim, lim, size=w.shape)
    return net


def forward(net: QNetwork, x) -> np.ndarray:
    return net.forward(x)


def backward_td(net: QNetwork, inputs, actions, targets) -> tuple[float, np.ndarray]:
    """Mean squared TD error on the taken actions and its gradient.

    Returns ``(loss, grads)`` where ``grads`` is a fresh flat array laid out
    like ``net.params``. Only the output unit of each item's action receives
    loss gradient.
    """
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    a = np.ascontiguousarray(actions, dtype=np.int64)
    y = np.ascontiguousarray(targets, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"inputs have shape {x.shape}, network expects (B, {net.layer_sizes[0]})")
    if not (len(x) == len(a) == len(y)):
        raise ValueError(f"batch lengths differ: {len(x)}, {len(a)}, {len(y)}")
    n_out = net.layer_sizes[-1]
    if a.size and (a.min() < 0 or a.max() >= n_out):
        raise ValueError(f"actions must lie in [0, {n_out})")

    acts = net._activations(x)
    g = np.empty_like(acts[-1])
    loss = kernels.td_residual(acts[-1], a, y, g)

    grads = np.empty(net.n_params)
    gw, gb = _layer_views(grads, net.layer_sizes)
    for i in range(len(net.weights) - 1, -1, -1):
        np.matmul(acts[i].T, g, out=gw[i])
        g.sum(axis=0, out=gb[i])
        if i:
            g = g @ net.weights[i].T
            kernels.relu_mask_grad(g, acts[i])
    return loss, grads


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-8
    step_count: int = 0

    @classmethod
    def for_network(cls, net: QNetwork, learning_rate: float = 1e-3, **kw) -> "AdamState":
        return cls(np.zeros(net.n_params), np.zeros(net.n_params), learning_rate=learning_rate, **kw)


def adam_update(net: QNetwork, grads: np.ndarray, adam: AdamState) -> tuple[QNetwork, AdamState]:
    """One bias-corrected Adam step, in place on ``net`` and ``adam``."""
    if grads.shape != net.params.shape or adam.first_moment.shape != net.params.shape:
        raise ValueError("gradient / optimizer state shape does not match the network")
    adam.step_count += 1
    kernels.adam_step(
        net.params,
        np.ascontiguousarray(grads, dtype=np.float64),
        adam.first_moment,
        adam.second_moment,
        adam.learning_rate,
        adam.beta1,
        adam.beta2,
        adam.epsilon_hat,
        adam.step_count,
    )
    return net, adam


def copy_parameters(src: QNetwork, dst: QNetwork) -> QNetwork:
    if src.layer_sizes != dst.layer_sizes:
        raise ValueError(f"cannot copy {src.layer_sizes} parameters into {dst.layer_sizes}")
    if src is not dst:
        np.copyto(dst.params, src.params)
    return dst


def clone(net: QNetwork) -> QNetwork:
    return QNetwork(net.layer_sizes, net.params.copy())


# -- checkpoints -----------------------------------------------------------
# <u4 layer count> <u4 size>... <f8 params>..., all little-endian


def save_checkpoint(net: QNetwork, path: str | Path) -> None:
    sizes = net.layer_sizes
    header = struct.pack(f"<I{len(sizes)}I", len(sizes), *sizes)
    Path(path).write_bytes(header + net.params.astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> QNetwork:
    raw = Path(path).read_bytes()
    (n_layers,) = struct.unpack_from("<I", raw, 0)
    sizes = struct.unpack_from(f"<{n_layers}I", raw, 4)
    body = raw[4 + 4 * n_layers :]
    expected = parameter_count(sizes)
    if len(body) != 8 * expected:
        raise ValueError(f"checkpoint holds {len(body) // 8} values, {sizes} needs {expected}")
    return QNetwork(sizes, np.frombuffer(body, dtype="<f8").astype(np.float64))


# -- finite-difference verification ----------------------------------------


def _td_loss(net: QNetwork, x, a, y) -> float:
    q = net.forward(x)[np.arange(len(a)), a]
    d = q - y
    return float(np.mean(d * d))


def finite_difference_error(net: QNetwork, x, a, y, step: float = 1e-5) -> float:
    """Max relative error between ``backward_td`` and central differences."""
    _, analytic = backward_td(net, x, a, y)
    numeric = np.empty_like(analytic)
    p = net.params
    for k in range(p.size):
        orig = p[k]
        p[k] = orig + step
        up = _td_loss(net, x, a, y)
        p[k] = orig - step
        down = _td_loss(net, x, a, y)
        p[k] = orig
        numeric[k] = (up - down) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


@dataclass
class GradientCheckReport:
    trials: int
    max_rel_error: float
    errors: list[float] = field(default_factory=list)


def gradient_check(trials: int = 100, seed: int = 0, step: float = 1e-5) -> GradientCheckReport:
    """Random nets up to 10-8-4 with batches up to 8, checked ``trials`` times."""
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(trials):
        sizes = (int(rng.integers(2, 11)), int(rng.integers(2, 9)), 4)
        net = init_network(sizes, rng)
        net.biases[0][...] = rng.normal(0, 0.1, size=sizes[1])
        b = int(rng.integers(1, 9))
        x = rng.normal(size=(b, sizes[0]))
        a = rng.integers(0, 4, size=b)
        y = rng.normal(size=b)
        errors.append(finite_difference_error(net, x, a, y, step))
    return GradientCheckReport(trials=trials, max_rel_error=max(errors), errors=errors)
