"""Drive-reduction rewards and the two Q-learning agents.

The monolithic agent learns one Q-function from the multi-stat drive
reduction. The modular agent keeps one Q-network per stat, each trained on
that stat's own drive reduction, and acts on the sum of their Q-vectors.
Both draw every random number (initialisation, exploration, replay
sampling) from the generator they are constructed with.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivergenceError
from .neuralnet import AdamState, QNetwork, adam_update, backward_td, clone, copy_parameters, init_network
from .qlearn import (
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    epsilon_at,
    select_epsilon_greedy,
    should_sync_target,
    td_target,
)


@dataclass(frozen=True)
class DriveParams:
    setpoints: tuple[float, ...]
    n: int = 4
    m: int = 2

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError(f"drive exponents must be >= 1, got n={self.n}, m={self.m}")


def _root(x, m: int):
    # one code path for both drive forms so they agree bit-for-bit when N=1
    return np.sqrt(x) if m == 2 else np.power(x, 1.0 / m)


def _deviation_powers(H, setpoints, n: int) -> np.ndarray:
    # always 1-D: numpy's 0-d power path can round differently from the array loop
    h = np.atleast_1d(np.asarray(H, dtype=np.float64))
    return np.abs(np.atleast_1d(np.asarray(setpoints, dtype=np.float64)) - h) ** n


def drive_mono(H, params: DriveParams) -> float:
    """``(sum_i |h*_i - h_i|^n)^(1/m)``."""
    return float(_root(np.sum(_deviation_powers(H, params.setpoints, params.n)), params.m))


def drive_single(h_i: float, setpoint: float, params: DriveParams) -> float:
    return float(_root(_deviation_powers(h_i, setpoint, params.n)[0], params.m))


def drive_per_stat(H, params: DriveParams) -> np.ndarray:
    return _root(_deviation_powers(H, params.setpoints, params.n), params.m)


def reward_mono(H_t, H_next, params: DriveParams) -> float:
    return drive_mono(H_t, params) - drive_mono(H_next, params)


def reward_modular(H_t, H_next, params: DriveParams) -> np.ndarray:
    """Per-stat drive reductions; an unchanged stat yields exactly 0."""
    return drive_per_stat(H_t, params) - drive_per_stat(H_next, params)


class _QUnit:
    """Online net, target net and optimizer for one Q-function."""

    def __init__(self, sizes: Sequence[int], learning_rate: float, rng: np.random.Generator):
        self.online = init_network(sizes, rng)
        self.target = clone(self.online)
        self.adam = AdamState.for_network(self.online, learning_rate)

    def update(self, obs, actions, rewards, next_obs, gamma: float) -> float:
        targets = td_target(rewards, gamma, self.target.forward(next_obs))
        loss, grads = backward_td(self.online, obs, actions, targets)
        adam_update(self.online, grads, self.adam)
        return loss

    def sync(self) -> None:
        copy_parameters(self.online, self.target)


class _QAgent:
    kind = "base"

    def __init__(
        self,
        obs_dim: int,
        n_stats: int,
        hidden: Sequence[int],
        n_units: int,
        rng: np.random.Generator,
        *,
        gamma: float = 0.5,
        learning_rate: float = 1e-3,
        buffer_capacity: int = 30_000,
        batch_size: int = 512,
        target_period: int = 200,
        schedule: EpsilonSchedule | None = None,
        n_actions: int = 4,
        input_scale=None,
    ):
        self.rng = rng
        # observations are multiplied by this before reaching any network
        self.input_scale = None if input_scale is None else np.asarray(input_scale, dtype=np.float64)
        self.gamma = gamma
        self.batch_size = batch_size
        self.target_period = target_period
        self.schedule = schedule or EpsilonSchedule()
        sizes = (obs_dim, *hidden, n_actions)
        self.units = [_QUnit(sizes, learning_rate, rng) for _ in range(n_units)]
        self.buffer = ReplayBuffer(buffer_capacity, obs_dim, n_stats)
        self.n_updates = 0

    def scale(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        return obs if self.input_scale is None else obs * self.input_scale

    def q_values(self, obs) -> np.ndarray:
        """Summed Q-vector for an already scaled input."""
        q = self.units[0].online.forward(obs)
        for unit in self.units[1:]:
            q = q + unit.online.forward(obs)
        return q

    def epsilon(self, t: int) -> float:
        return epsilon_at(self.schedule, t)

    def act(self, obs, t: int, eps: float | None = None) -> int:
        eps = self.epsilon(t) if eps is None else eps
        try:
            return select_epsilon_greedy(self.q_values(self.scale(obs)), eps, self.rng)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), step=t, agent=self.kind) from None

    def remember(self, transition: Transition) -> None:
        if self.input_scale is not None:
            transition = dataclasses.replace(transition, obs=self.scale(transition.obs), next_obs=self.scale(transition.next_obs))
        self.buffer.push(transition)

    def _unit_rewards(self, batch_rewards: np.ndarray, batch_mono: np.ndarray, i: int) -> np.ndarray:
        raise NotImplementedError

    def learn_step(self, t: int):
        """One gradient update per unit on a single shared batch.

        Does nothing until the buffer holds a full batch. Target networks are
        hard-synced whenever ``t`` is a positive multiple of the sync period.
        """
        losses = None
        if self.buffer.size >= self.batch_size:
            b = self.buffer.sample(self.batch_size, self.rng)
            losses = np.array(
                [
                    unit.update(b.obs, b.actions, self._unit_rewards(b.rewards, b.reward_mono, i), b.next_obs, self.gamma)
                    for i, unit in enumerate(self.units)
                ]
            )
            self.n_updates += 1
            if not np.all(np.isfinite(losses)):
                raise DivergenceError(f"non-finite TD loss {losses}", step=t, agent=self.kind)
        if should_sync_target(t, self.target_period):
            for unit in self.units:
                unit.sync()
        return losses


class MonolithicAgent(_QAgent):
    """Single DQN trained on the scalar multi-stat drive reduction."""

    kind = "monolithic"

    def __init__(self, obs_dim: int, n_stats: int, hidden: Sequence[int], rng: np.random.Generator, **kw):
        super().__init__(obs_dim, n_stats, hidden, 1, rng, **kw)

    @property
    def online(self) -> QNetwork:
        return self.units[0].online

    @property
    def target(self) -> QNetwork:
        return self.units[0].target

    @property
    def adam(self) -> AdamState:
        return self.units[0].adam

    def _unit_rewards(self, batch_rewards, batch_mono, i):
        return batch_mono

    def learn_step(self, t: int) -> float | None:
        losses = super().learn_step(t)
        return None if losses is None else float(losses[0])


class ModularAgent(_QAgent):
    """One DQN per stat; greedy action is the argmax of the summed Q-vectors."""

    kind = "modular"

    def __init__(self, obs_dim: int, n_stats: int, hidden: Sequence[int], rng: np.random.Generator, **kw):
        super().__init__(obs_dim, n_stats, hidden, n_stats, rng, **kw)

    @property
    def modules(self) -> list[QNetwork]:
        return [u.online for u in self.units]

    @property
    def targets(self) -> list[QNetwork]:
        return [u.target for u in self.units]

    def _unit_rewards(self, batch_rewards, batch_mono, i):
        return batch_rewards[:, i]


class RandomAgent:
    """Uniform random policy; the chance-level baseline for the metric."""

    kind = "random"

    def __init__(self, rng: np.random.Generator, n_actions: int = 4):
        self.rng = rng
        self.n_actions = n_actions
        self.n_updates = 0

    def epsilon(self, t: int) -> float:
        return 1.0

    def act(self, obs, t: int, eps: float | None = None) -> int:
        return int(self.rng.integers(self.n_actions))

    def remember(self, transition: Transition) -> None:
        pass

    def learn_step(self, t: int) -> None:
        return None


def observation_scale(config) -> np.ndarray:
    """Per-input multipliers bringing resource readings and stats to order one.

    Resource windows are divided by each kernel's peak density and stats by
    their set-points, so a sated agent at a resource peak sees values near 1.
    """
    parts = []
    for k in config.kernels():
        peak = 1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(np.asarray(k.covariance, dtype=np.float64))))
        parts.append(np.full(9, 1.0 / peak))
    sp = np.asarray(config.setpoints, dtype=np.float64)
    parts.append(np.where(sp > 0, 1.0 / np.where(sp > 0, sp, 1.0), 1.0))
    return np.concatenate(parts)


def make_agent(config, rng: np.random.Generator):
    """Build the agent named by ``config.agent_kind``."""
    if config.agent_kind == "random":
        return RandomAgent(rng)
    n = config.n_resources
    kw = dict(
        gamma=config.gamma,
        learning_rate=config.learning_rate,
        buffer_capacity=config.buffer_capacity,
        batch_size=config.batch_size,
        target_period=config.target_period,
        schedule=EpsilonSchedule(config.eps_initial, config.eps_final, config.anneal_steps),
        input_scale=observation_scale(config) if config.scale_inputs else None,
    )
    if config.agent_kind == "monolithic":
        return MonolithicAgent(10 * n, n, config.hidden_monolithic, rng, **kw)
    if config.agent_kind == "modular":
        return ModularAgent(10 * n, n, config.hidden_modular, rng, **kw)
    raise ValueError(f"unknown agent kind {config.agent_kind!r}")
