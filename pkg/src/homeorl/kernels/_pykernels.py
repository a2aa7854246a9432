"""Pure-numpy fallback for the hot per-step kernels.

Every function mirrors the signature of its counterpart in ``_ckernels.pyx``
and works in place. The elementwise arithmetic is written in the same
operation order as the compiled version so that both backends round
identically wherever no reduction is involved.
"""

from __future__ import annotations

import numpy as np


def bias_relu(z: np.ndarray, b: np.ndarray) -> None:
    z += b
    np.maximum(z, 0.0, out=z)


def bias_add(z: np.ndarray, b: np.ndarray) -> None:
    z += b


def relu_mask_grad(g: np.ndarray, a: np.ndarray) -> None:
    """Zero ``g`` wherever the post-activation ``a`` is not positive."""
    g[a <= 0.0] = 0.0


def td_residual(q: np.ndarray, actions: np.ndarray, targets: np.ndarray, grad_out: np.ndarray) -> float:
    """Mean squared TD error on the taken actions; writes dLoss/dq into ``grad_out``."""
    rows = np.arange(q.shape[0])
    diff = q[rows, actions] - targets
    grad_out.fill(0.0)
    grad_out[rows, actions] = 2.0 * diff / q.shape[0]
    return float(np.dot(diff, diff) / q.shape[0])


def adam_step(
    p: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    step: int,
) -> None:
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def observe_window(values: np.ndarray, x: int, y: int, out: np.ndarray) -> None:
    """Fill ``out[:9*N]`` with the zero-padded 3x3 window around (x, y).

    Rows run from y+1 down to y-1, columns from x-1 to x+1.
    """
    n, height, width = values.shape
    win = np.zeros((n, 3, 3))
    y0, y1 = max(y - 1, 0), min(y + 1, height - 1)
    x0, x1 = max(x - 1, 0), min(x + 1, width - 1)
    block = values[:, y0 : y1 + 1, x0 : x1 + 1][:, ::-1, :]
    r0 = (y + 1) - y1
    c0 = x0 - (x - 1)
    win[:, r0 : r0 + block.shape[1], c0 : c0 + block.shape[2]] = block
    out[: 9 * n] = win.reshape(-1)
