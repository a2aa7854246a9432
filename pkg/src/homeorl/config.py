"""Run configuration, presets, and the key-value config file format.

A config file is UTF-8 text with one ``key = value`` per line; ``#`` starts a
comment. Values are JSON literals (``0.5``, ``[5, 5, 5, 5]``, ``"modular"``,
``null``), which keeps the files valid TOML for every field used here. Bare
words are accepted as strings. Keys left out take their defaults; a
``preset`` key is applied first, whatever its position in the file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .envgrid import ResourceKernel
from .errors import ConfigError

AGENT_KINDS = ("monolithic", "modular", "random")
PRESETS = ("paper", "desk")

_IDENTITY = ((1.0, 0.0), (0.0, 1.0))


@dataclass(frozen=True)
class RunConfig:
    # environment
    n_resources: int = 4
    grid_width: int = 11
    grid_height: int = 11
    kernel_means: tuple = ((0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0))
    kernel_covariances: tuple = (_IDENTITY,) * 4
    depletion: float = 0.004
    setpoints: tuple = (5.0, 5.0, 5.0, 5.0)
    initial_stats: tuple = (0.5, 0.5, 0.5, 0.5)
    drive_n: int = 4
    drive_m: int = 2
    # learners
    hidden_monolithic: tuple = (1024, 1024)
    hidden_modular: tuple = (500, 500)
    learning_rate: float = 1e-3
    gamma: float = 0.5
    scale_inputs: bool = True
    buffer_capacity: int = 30_000
    target_period: int = 200
    batch_size: int = 512
    eps_initial: float = 1.0
    eps_final: float = 0.01
    anneal_steps: int = 5000
    # run
    total_steps: int = 30_000
    delta_window: tuple = (15_000, 30_000)
    final_window: int = 1000
    agent_kind: str = "monolithic"
    seed: int = 0
    perturb_time: int | None = None
    perturb_stat: int = 3
    perturb_value: float = 20.0
    log_stride: int = 1
    preset: str = "paper"

    def __post_init__(self) -> None:
        validate(self)

    def kernels(self) -> list[ResourceKernel]:
        return [
            ResourceKernel(float(mx), float(my), tuple(tuple(float(c) for c in row) for row in cov))
            for (mx, my), cov in zip(self.kernel_means, self.kernel_covariances)
        ]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @property
    def perturbation(self) -> tuple[int, int, float] | None:
        if self.perturb_time is None:
            return None
        return (self.perturb_time, self.perturb_stat, self.perturb_value)


# Full scale costs ~1e14 multiply-adds per run; the desk preset keeps the
# structural ratios (buffer = run length, sync period, gamma) at ~1% compute.
DESK_OVERRIDES: dict[str, Any] = dict(
    hidden_monolithic=(128, 128),
    hidden_modular=(64, 64),
    batch_size=64,
    total_steps=12_000,
    buffer_capacity=12_000,
    delta_window=(6_000, 12_000),
    preset="desk",
)

DESK_PERTURB_TIME = 6_000
FULL_PERTURB_TIME = 15_000
DESK_SEEDS = 10


def preset_config(name: str = "paper", **changes) -> RunConfig:
    if name == "paper":
        base: dict[str, Any] = {}
    elif name == "desk":
        base = dict(DESK_OVERRIDES)
    else:
        raise ConfigError(f"preset: unknown preset {name!r}, expected one of {PRESETS}")
    base.update(changes)
    base["preset"] = name
    return RunConfig(**base)


def perturb_time_for(config: RunConfig) -> int:
    return DESK_PERTURB_TIME if config.preset == "desk" else FULL_PERTURB_TIME


def _fail(key: str, msg: str) -> None:
    raise ConfigError(f"{key}: {msg}")


def validate(c: RunConfig) -> None:
    n = c.n_resources
    if n < 1:
        _fail("n_resources", f"must be >= 1, got {n}")
    for key in ("kernel_means", "kernel_covariances", "setpoints", "initial_stats"):
        if len(getattr(c, key)) != n:
            _fail(key, f"needs {n} entries (one per resource), got {len(getattr(c, key))}")
    if c.grid_width < 3 or c.grid_height < 3:
        _fail("grid_width", f"grid must be at least 3x3, got {c.grid_width}x{c.grid_height}")
    if any(s <= 0 for s in c.setpoints):
        _fail("setpoints", f"must be strictly positive, got {c.setpoints}")
    if c.drive_n < 1 or c.drive_m < 1:
        _fail("drive_n", f"drive exponents must be >= 1, got ({c.drive_n}, {c.drive_m})")
    if not 0.0 <= c.gamma < 1.0:
        _fail("gamma", f"must lie in [0, 1), got {c.gamma}")
    if c.learning_rate <= 0:
        _fail("learning_rate", f"must be positive, got {c.learning_rate}")
    if not 0.0 <= c.eps_final <= c.eps_initial <= 1.0:
        _fail("eps_final", f"need 0 <= eps_final <= eps_initial <= 1, got {c.eps_final}, {c.eps_initial}")
    if c.anneal_steps < 1:
        _fail("anneal_steps", f"must be >= 1, got {c.anneal_steps}")
    if c.total_steps < c.anneal_steps:
        _fail("total_steps", f"must be >= anneal_steps ({c.anneal_steps}), got {c.total_steps}")
    if c.batch_size < 1 or c.batch_size > c.buffer_capacity:
        _fail("batch_size", f"must lie in [1, buffer_capacity={c.buffer_capacity}], got {c.batch_size}")
    if c.target_period < 1:
        _fail("target_period", f"must be positive, got {c.target_period}")
    if any(h < 1 for h in (*c.hidden_monolithic, *c.hidden_modular)):
        _fail("hidden_monolithic", "hidden layer sizes must be positive")
    t1, t2 = c.delta_window
    if not 0 <= t1 < t2 <= c.total_steps:
        _fail("delta_window", f"need 0 <= t1 < t2 <= total_steps={c.total_steps}, got {c.delta_window}")
    if not 1 <= c.final_window <= c.total_steps:
        _fail("final_window", f"must lie in [1, total_steps], got {c.final_window}")
    if c.agent_kind not in AGENT_KINDS:
        _fail("agent_kind", f"must be one of {AGENT_KINDS}, got {c.agent_kind!r}")
    if c.preset not in PRESETS:
        _fail("preset", f"must be one of {PRESETS}, got {c.preset!r}")
    if c.perturb_time is not None:
        if not 0 <= c.perturb_time < c.total_steps:
            _fail("perturb_time", f"must lie in [0, total_steps={c.total_steps}), got {c.perturb_time}")
        if not 0 <= c.perturb_stat < n:
            _fail("perturb_stat", f"must index one of {n} stats, got {c.perturb_stat}")
    if c.log_stride < 1:
        _fail("log_stride", f"must be >= 1, got {c.log_stride}")
    for i, cov in enumerate(c.kernel_covariances):
        (a, b), (b2, d) = cov
        if b != b2 or a <= 0 or d <= 0 or a * d - b * b <= 0:
            _fail("kernel_covariances", f"kernel {i} covariance is not symmetric positive definite")


# -- file format ------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: Any) -> Any:
    default = _FIELDS[key].default
    if raw is None:
        if key == "perturb_time":
            return None
        raise ValueError("null is not allowed here")
    if isinstance(default, tuple):
        if not isinstance(raw, list):
            raise ValueError("expected a list")

        def freeze(v):
            return tuple(freeze(x) for x in v) if isinstance(v, list) else v

        return freeze(raw)
    if isinstance(default, bool):
        if not isinstance(raw, bool):
            raise ValueError("expected true or false")
        return raw
    if isinstance(default, int) or key == "perturb_time":
        if isinstance(raw, bool) or not (isinstance(raw, int) or (isinstance(raw, float) and raw.is_integer())):
            raise ValueError("expected an integer")
        return int(raw)
    if isinstance(default, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValueError("expected a number")
        return float(raw)
    if isinstance(default, str):
        if not isinstance(raw, str):
            raise ValueError("expected a string")
        return raw
    return raw


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if text in ("true", "false"):
        return text == "true"
    if text and all(ch.isalnum() or ch in "_-." for ch in text):
        return text
    raise ValueError(f"cannot parse value {text!r}")


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _coerce(key, _parse_value(raw))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        lines[key] = lineno
    preset = values.pop("preset", "paper")
    try:
        return preset_config(preset, **values)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0]
        where = f"{source}:{lines[key]}: " if key in lines else f"{source}: "
        raise ConfigError(where + str(exc)) from None


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def _to_json(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_to_json(v) for v in value]
    return value


def serialize_config(config: RunConfig) -> str:
    out = []
    for f in dataclasses.fields(RunConfig):
        out.append(f"{f.name} = {json.dumps(_to_json(getattr(config, f.name)))}")
    return "\n".join(out) + "\n"
