"""Monolithic and modular deep Q-learning for multi-stat homeostasis."""

from .agents import DriveParams, ModularAgent, MonolithicAgent, RandomAgent, make_agent
from .config import RunConfig, parse_config, preset_config, serialize_config
from .errors import ConfigError, DivergenceError
from .harness import (
    RunLog,
    SweepResult,
    compute_delta,
    final_stat_mean,
    perturbation_experiment,
    run_episode,
    sweep_exploration,
    sweep_gamma,
    sweep_setpoints,
)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
