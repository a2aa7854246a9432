"""Replay memory, exploration schedule and TD helpers shared by both agents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError


@dataclass(frozen=True, eq=False)
class Transition:
    """One step of experience. There is no terminal flag: the task never ends.

    ``rewards`` holds the per-stat drive reductions; ``reward_mono`` the
    scalar multi-stat drive reduction, which cannot be rebuilt from the
    per-stat vector.
    """

    obs: np.ndarray
    action: int
    rewards: np.ndarray
    reward_mono: float
    next_obs: np.ndarray


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    reward_mono: np.ndarray
    next_obs: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """Fixed-capacity FIFO ring over preallocated arrays."""

    def __init__(self, capacity: int, obs_dim: int, n_rewards: int):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros((capacity, n_rewards))
        self.reward_mono = np.zeros(capacity)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def push(self, tr: Transition) -> "ReplayBuffer":
        i = self._next
        self.obs[i] = tr.obs
        self.actions[i] = tr.action
        self.rewards[i] = tr.rewards
        self.reward_mono[i] = tr.reward_mono
        self.next_obs[i] = tr.next_obs
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return self

    def _ordered_slots(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def __iter__(self):
        """Transitions oldest first."""
        for i in self._ordered_slots():
            yield Transition(
                self.obs[i].copy(),
                int(self.actions[i]),
                self.rewards[i].copy(),
                float(self.reward_mono[i]),
                self.next_obs[i].copy(),
            )

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < batch_size:
            raise ValueError(f"cannot sample {batch_size} transitions from a buffer holding {self.size}")
        return rng.choice(self.size, size=batch_size, replace=False)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draw without replacement within the batch."""
        idx = self.sample_indices(batch_size, rng)
        return Batch(
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.reward_mono[idx],
            self.next_obs[idx],
        )


@dataclass(frozen=True)
class EpsilonSchedule:
    eps_initial: float = 1.0
    eps_final: float = 0.01
    anneal_steps: int = 5000

    def __post_init__(self) -> None:
        if self.anneal_steps < 1:
            raise ValueError(f"anneal_steps must be >= 1, got {self.anneal_steps}")


def epsilon_at(schedule: EpsilonSchedule, t: float) -> float:
    """Linear from ``eps_initial`` at t=0 to ``eps_final`` at t=K-1, flat after.

    K=1 gives ``eps_final`` from the very first step.
    """
    k = schedule.anneal_steps
    if k <= 1 or t >= k - 1:
        return schedule.eps_final
    frac = max(t, 0) / (k - 1)
    return schedule.eps_initial + (schedule.eps_final - schedule.eps_initial) * frac


def select_epsilon_greedy(q_values: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Random action with probability ``eps``, else argmax with random tie-breaking."""
    if not np.all(np.isfinite(q_values)):
        raise DivergenceError(f"non-finite Q-values {q_values}")
    if rng.random() < eps:
        return int(rng.integers(len(q_values)))
    best = np.flatnonzero(q_values == q_values.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


def td_target(reward, gamma: float, target_q_next: np.ndarray):
    """``r + gamma * max_a Q_target(s', a)``, no terminal masking.

    Works on a single transition or elementwise over a batch
    (``target_q_next`` of shape ``(B, A)``).
    """
    return reward + gamma * np.max(target_q_next, axis=-1)


def should_sync_target(t: int, period: int) -> bool:
    if period <= 0:
        raise ValueError(f"sync period must be positive, got {period}")
    return t > 0 and t % period == 0
