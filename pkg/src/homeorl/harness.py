"""Episode loop, homeostatic metrics, and the four experiment sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .agents import DriveParams, make_agent, reward_modular, reward_mono
from .config import RunConfig, perturb_time_for
from .envgrid import ResourceGrid, apply_clamp, build_resource_grid, initial_state, observe, step
from .errors import DivergenceError
from .qlearn import Transition

log = logging.getLogger(__name__)


@dataclass(eq=False)
class RunLog:
    """Per-step record. Row ``t`` holds the stats *before* the action at step t."""

    config: RunConfig
    stats: np.ndarray  # (T, N)
    positions: np.ndarray  # (T, 2) x, y before the action
    actions: np.ndarray  # (T,)
    epsilon: np.ndarray  # (T,)
    rewards: np.ndarray  # (T, N) per-stat drive reduction of step t
    reward_mono: np.ndarray  # (T,)
    loss: np.ndarray  # (T,) summed over Q-units, NaN before learning starts
    final_stats: np.ndarray  # (N,) stats after the last step
    final_position: tuple[int, int] = (0, 0)
    n_updates: int = 0

    def __len__(self) -> int:
        return len(self.actions)


def run_episode(config: RunConfig, agent=None, grid: ResourceGrid | None = None) -> RunLog:
    """Train one agent online for ``config.total_steps`` steps of a single episode.

    The loop per step is observe, act, move, reward, store, learn (and sync).
    A configured clamp is applied at the start of its step, so the stat reads
    the clamp value from that row of the log onward.
    """
    rng = np.random.default_rng(config.seed)
    if grid is None:
        grid = build_resource_grid(config.kernels(), config.grid_width, config.grid_height)
    if agent is None:
        agent = make_agent(config, rng)
    drive = DriveParams(tuple(config.setpoints), config.drive_n, config.drive_m)

    T, n = config.total_steps, config.n_resources
    stats = np.empty((T, n))
    positions = np.empty((T, 2), dtype=np.int64)
    actions = np.empty(T, dtype=np.int64)
    epsilon = np.empty(T)
    rewards = np.empty((T, n))
    r_mono = np.empty(T)
    losses = np.full(T, np.nan)

    state = initial_state(config)
    obs = observe(state, grid)
    with threadpool_limits(limits=1):
        for t in range(T):
            if config.perturb_time == t:
                state = apply_clamp(state, config.perturb_stat, config.perturb_value)
                obs = observe(state, grid)
            h = state.stats.h
            eps = agent.epsilon(t)
            a = agent.act(obs, t, eps)
            nxt = step(state, a, grid, config.depletion)
            r_vec = reward_modular(h, nxt.stats.h, drive)
            r_m = reward_mono(h, nxt.stats.h, drive)
            next_obs = observe(nxt, grid)
            agent.remember(Transition(obs, a, r_vec, r_m, next_obs))
            loss = agent.learn_step(t)

            stats[t] = h
            positions[t] = (state.pos_x, state.pos_y)
            actions[t] = a
            epsilon[t] = eps
            rewards[t] = r_vec
            r_mono[t] = r_m
            if loss is not None:
                losses[t] = float(np.sum(loss))
            state, obs = nxt, next_obs

    return RunLog(
        config=config,
        stats=stats,
        positions=positions,
        actions=actions,
        epsilon=epsilon,
        rewards=rewards,
        reward_mono=r_mono,
        loss=losses,
        final_stats=state.stats.h.copy(),
        final_position=(state.pos_x, state.pos_y),
        n_updates=agent.n_updates,
    )


# -- metrics ---------------------------------------------------------------


def compute_delta(log, t1: int, t2: int, setpoints: Sequence[float], exclude_stats: Iterable[int] = ()) -> float:
    """Average summed |set-point deviation| per step over ``t1 <= t < t2``."""
    stats = log.stats if isinstance(log, RunLog) else np.asarray(log)
    if not 0 <= t1 < t2 <= len(stats):
        raise ValueError(f"empty or out-of-range window [{t1}, {t2}) for a log of {len(stats)} steps")
    keep = np.ones(stats.shape[1], dtype=bool)
    keep[list(exclude_stats)] = False
    dev = np.abs(np.asarray(setpoints, dtype=np.float64)[keep] - stats[t1:t2, keep])
    return float(dev.sum() / (t2 - t1))


def final_stat_mean(log, window: int) -> float:
    """Mean of all stats over the last ``window`` logged steps."""
    stats = log.stats if isinstance(log, RunLog) else np.asarray(log)
    if not 1 <= window <= len(stats):
        raise ValueError(f"window {window} does not fit a log of {len(stats)} steps")
    return float(stats[-window:].mean())


# -- sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    experiment: str
    setting: float
    agent: str
    seed: int
    delta: float
    final_stat_mean: float


@dataclass(frozen=True)
class Aggregate:
    n: int
    median: float
    mean: float
    sd: float
    q1: float
    q3: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Aggregate":
        v = np.asarray(values, dtype=np.float64)
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        return cls(len(v), float(med), float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0, float(q1), float(q3))


@dataclass
class SweepResult:
    records: list[SweepRecord] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def settings(self) -> list[float]:
        return sorted({r.setting for r in self.records})

    def agents(self) -> list[str]:
        return sorted({r.agent for r in self.records})

    def values(self, setting: float, agent: str, metric: str = "delta") -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records if r.setting == setting and r.agent == agent])

    def aggregate(self, metric: str = "delta") -> dict[tuple[float, str], Aggregate]:
        out = {}
        for s in self.settings():
            for a in self.agents():
                v = self.values(s, a, metric)
                if len(v):
                    out[(s, a)] = Aggregate.of(v)
        return out

    def medians(self, agent: str, metric: str = "delta") -> dict[float, float]:
        return {s: agg.median for (s, a), agg in self.aggregate(metric).items() if a == agent}


@dataclass(frozen=True)
class _Task:
    experiment: str
    setting: float
    config: RunConfig
    window: tuple[int, int]
    exclude: tuple[int, ...] = ()
    keep_log: bool = False


def _execute(task: _Task):
    c = task.config
    try:
        run = run_episode(c)
    except DivergenceError as exc:
        return task, None, f"{task.experiment} setting={task.setting} agent={c.agent_kind} seed={c.seed}: {exc}"
    rec = SweepRecord(
        experiment=task.experiment,
        setting=float(task.setting),
        agent=c.agent_kind,
        seed=c.seed,
        delta=compute_delta(run, *task.window, c.setpoints, task.exclude),
        final_stat_mean=final_stat_mean(run, c.final_window),
    )
    return task, (rec, run if task.keep_log else None), None


def _run_tasks(tasks: list[_Task], workers: int = 1):
    """Results come back in task order regardless of completion order."""
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute, tasks))
    else:
        results = []
        for i, task in enumerate(tasks):
            log.info("run %d/%d: %s setting=%s agent=%s seed=%d", i + 1, len(tasks), task.experiment,
                     task.setting, task.config.agent_kind, task.config.seed)
            results.append(_execute(task))
    sweep = SweepResult()
    runs = []
    for task, payload, failure in results:
        if failure is not None:
            sweep.failures.append(failure)
            continue
        rec, run = payload
        sweep.records.append(rec)
        runs.append(run)
    return sweep, runs


def _seeds(base: RunConfig, seeds: int) -> list[int]:
    return [base.seed + k for k in range(seeds)]


def sweep_setpoints(base: RunConfig, setpoints: Sequence[float], seeds: int, workers: int = 1) -> SweepResult:
    n = base.n_resources
    tasks = [
        _Task("setpoint", s, base.replace(setpoints=(float(s),) * n, seed=seed), base.delta_window)
        for s in setpoints
        for seed in _seeds(base, seeds)
    ]
    return _run_tasks(tasks, workers)[0]


def sweep_gamma(base: RunConfig, gammas: Sequence[float], seeds: int, workers: int = 1) -> SweepResult:
    tasks = [
        _Task("gamma", g, base.replace(gamma=float(g), seed=seed), base.delta_window)
        for g in gammas
        for seed in _seeds(base, seeds)
    ]
    return _run_tasks(tasks, workers)[0]


def sweep_exploration(
    base: RunConfig,
    anneal_steps_list: Sequence[int],
    seeds: int,
    both_agents: bool = True,
    workers: int = 1,
) -> SweepResult:
    kinds = ("monolithic", "modular") if both_agents else (base.agent_kind,)
    tasks = [
        _Task("explore", k, base.replace(anneal_steps=int(k), agent_kind=kind, seed=seed), base.delta_window)
        for k in anneal_steps_list
        for kind in kinds
        for seed in _seeds(base, seeds)
    ]
    return _run_tasks(tasks, workers)[0]


@dataclass
class PerturbationResult:
    sweep: SweepResult
    perturb_time: int
    stat_index: int
    # agent -> (mean, sd) over seeds, each (T, N)
    timecourses: dict[str, tuple[np.ndarray, np.ndarray]]
    logs: dict[str, list[RunLog]]

    def paired_deltas(self) -> tuple[np.ndarray, np.ndarray]:
        """Post-clamp deltas (monolithic, modular), aligned by seed."""
        mono = {r.seed: r.delta for r in self.sweep.records if r.agent == "monolithic"}
        mod = {r.seed: r.delta for r in self.sweep.records if r.agent == "modular"}
        common = sorted(set(mono) & set(mod))
        return np.array([mono[s] for s in common]), np.array([mod[s] for s in common])


def perturbation_experiment(
    base: RunConfig,
    seeds: int,
    workers: int = 1,
    stat_index: int = 3,
    value: float = 20.0,
    perturb_time: int | None = None,
) -> PerturbationResult:
    """Both agents, one stat clamped halfway through; deviation of the rest afterward."""
    tp = perturb_time if perturb_time is not None else (base.perturb_time or perturb_time_for(base))
    window = (tp, base.total_steps)
    tasks = [
        _Task(
            "perturb",
            tp,
            base.replace(agent_kind=kind, seed=seed, perturb_time=tp, perturb_stat=stat_index, perturb_value=value),
            window,
            exclude=(stat_index,),
            keep_log=True,
        )
        for kind in ("monolithic", "modular")
        for seed in _seeds(base, seeds)
    ]
    sweep, runs = _run_tasks(tasks, workers)
    logs: dict[str, list[RunLog]] = {"monolithic": [], "modular": []}
    for run in runs:
        logs[run.config.agent_kind].append(run)
    timecourses = {}
    for kind, kind_logs in logs.items():
        if kind_logs:
            stack = np.stack([lg.stats for lg in kind_logs])
            timecourses[kind] = (stack.mean(axis=0), stack.std(axis=0))
    return PerturbationResult(sweep, tp, stat_index, timecourses, logs)


def random_policy_delta(base: RunConfig, seeds: int = 1, workers: int = 1) -> SweepResult:
    """Chance-level baseline: the same environment driven by a uniform random policy."""
    tasks = [
        _Task("random", 0.0, base.replace(agent_kind="random", seed=seed), base.delta_window)
        for seed in _seeds(base, seeds)
    ]
    return _run_tasks(tasks, workers)[0]
