"""Grid world with overlaid Gaussian resource maps and homeostatic stats.

Coordinates are ``(x, y)`` with ``0 <= x < width`` and ``0 <= y < height``;
layer values are indexed ``values[i, y, x]``. North increases ``y``.

Observation layout (length ``10 * N``)::

    [layer 0 window (9) | layer 1 window (9) | ... | h_1 ... h_N]

Each window is row-major with rows ``y+1, y, y-1`` and columns
``x-1, x, x+1``; cells outside the grid read 0.

Moves that would leave the grid are blocked: the agent stays put, the step
still elapses and intake is taken from the unchanged cell. Resources never
deplete. Clamped stats are frozen and skip both intake and depletion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError


class Action(IntEnum):
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3


N_ACTIONS = len(Action)

# (dx, dy) indexed by action
MOVES = np.array([(0, 1), (0, -1), (1, 0), (-1, 0)], dtype=np.int64)


@dataclass(frozen=True)
class ResourceKernel:
    mean_x: float
    mean_y: float
    covariance: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))

    def cov_matrix(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ResourceGrid:
    width: int
    height: int
    values: np.ndarray  # (N, height, width)

    @property
    def n_resources(self) -> int:
        return self.values.shape[0]

    def intake(self, x: int, y: int) -> np.ndarray:
        return self.values[:, y, x]


def _check_covariance(cov: np.ndarray, index: int) -> None:
    if cov.shape != (2, 2):
        raise ConfigError(f"kernel {index}: covariance must be 2x2, got shape {cov.shape}")
    if not np.allclose(cov, cov.T):
        raise ConfigError(f"kernel {index}: covariance is not symmetric")
    if cov[0, 0] <= 0 or cov[1, 1] <= 0 or np.linalg.det(cov) <= 0:
        raise ConfigError(f"kernel {index}: covariance is not positive definite")


def gaussian_density(xs: np.ndarray, ys: np.ndarray, kernel: ResourceKernel) -> np.ndarray:
    """Unit-integral bivariate normal density evaluated at ``(xs, ys)``."""
    cov = kernel.cov_matrix()
    inv = np.linalg.inv(cov)
    dx = xs - kernel.mean_x
    dy = ys - kernel.mean_y
    quad = inv[0, 0] * dx * dx + (inv[0, 1] + inv[1, 0]) * dx * dy + inv[1, 1] * dy * dy
    return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(np.linalg.det(cov)))


def build_resource_grid(kernels_: Sequence[ResourceKernel], width: int, height: int) -> ResourceGrid:
    """Evaluate one density layer per kernel at integer cell coordinates.

    Layers are not renormalised over the grid.
    """
    if not kernels_:
        raise ConfigError("at least one resource kernel is required")
    if width < 3 or height < 3:
        raise ConfigError(f"grid must be at least 3x3, got {width}x{height}")
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    layers = []
    for i, k in enumerate(kernels_):
        _check_covariance(k.cov_matrix(), i)
        layers.append(gaussian_density(xs, ys, k))
    values = np.ascontiguousarray(np.stack(layers))
    values.setflags(write=False)
    return ResourceGrid(width=width, height=height, values=values)


@dataclass(frozen=True, eq=False)
class InternalStats:
    h: np.ndarray
    setpoints: np.ndarray
    clamped: np.ndarray = field(default=None)  # type: ignore[assignment]
    clamp_values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        n = len(self.h)
        if self.clamped is None:
            object.__setattr__(self, "clamped", np.zeros(n, dtype=bool))
        if self.clamp_values is None:
            object.__setattr__(self, "clamp_values", np.zeros(n))


@dataclass(frozen=True, eq=False)
class EnvState:
    pos_x: int
    pos_y: int
    stats: InternalStats
    t: int = 0


def initial_state(config) -> EnvState:
    """Agent at the grid centre, stats at their configured start levels."""
    stats = InternalStats(
        h=np.array(config.initial_stats, dtype=np.float64),
        setpoints=np.array(config.setpoints, dtype=np.float64),
    )
    return EnvState(pos_x=config.grid_width // 2, pos_y=config.grid_height // 2, stats=stats, t=0)


def step(state: EnvState, action: int, grid: ResourceGrid, depletion: float) -> EnvState:
    dx, dy = MOVES[action]
    nx = state.pos_x + int(dx)
    ny = state.pos_y + int(dy)
    if not (0 <= nx < grid.width and 0 <= ny < grid.height):
        nx, ny = state.pos_x, state.pos_y
    s = state.stats
    h = s.h + grid.values[:, ny, nx] - depletion
    if s.clamped.any():
        h = np.where(s.clamped, s.clamp_values, h)
    stats = InternalStats(h=h, setpoints=s.setpoints, clamped=s.clamped, clamp_values=s.clamp_values)
    return EnvState(pos_x=nx, pos_y=ny, stats=stats, t=state.t + 1)


def observe(state: EnvState, grid: ResourceGrid) -> np.ndarray:
    n = grid.n_resources
    out = np.empty(10 * n)
    kernels.observe_window(grid.values, state.pos_x, state.pos_y, out)
    out[9 * n :] = state.stats.h
    return out


def apply_clamp(state: EnvState, stat_index: int, value: float) -> EnvState:
    """Freeze one stat at ``value`` from now on."""
    s = state.stats
    if not 0 <= stat_index < len(s.h):
        raise IndexError(f"stat index {stat_index} out of range for {len(s.h)} stats")
    clamped = s.clamped.copy()
    clamp_values = s.clamp_values.copy()
    h = s.h.copy()
    clamped[stat_index] = True
    clamp_values[stat_index] = value
    h[stat_index] = value
    stats = InternalStats(h=h, setpoints=s.setpoints, clamped=clamped, clamp_values=clamp_values)
    return replace(state, stats=stats)
