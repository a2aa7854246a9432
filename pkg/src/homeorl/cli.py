"""Command-line front end.

    homeorl run            one training episode per requested agent
    homeorl sweep-setpoint final stat level across set-points
    homeorl sweep-gamma    deviation across discount factors
    homeorl sweep-explore  deviation across epsilon annealing lengths
    homeorl perturb        clamp one stat mid-run, compare both agents
    homeorl plot           redraw the SVG figures from a results directory
    homeorl verify         parameter counts and finite-difference gradient check

Every experiment writes ``config.toml``, ``sweep.csv`` (or ``summary.csv``
for ``run``), per-run time-course CSVs where relevant, and SVG figures
into ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import harness, plots
from .config import DESK_SEEDS, RunConfig, parse_config, preset_config, serialize_config
from .csvio import read_sweep_csv, read_timecourse_csv, write_sweep_csv, write_timecourse_csv
from .errors import ConfigError, DivergenceError
from .neuralnet import gradient_check, parameter_count

log = logging.getLogger("homeorl")

AGENT_ALIASES = {"mono": "monolithic", "monolithic": "monolithic", "modular": "modular", "gmq": "modular"}

DEFAULT_VALUES = {
    "sweep-setpoint": "2,5,8",
    "sweep-gamma": "0,0.25,0.5,0.75,0.9",
    "sweep-explore": "1,400,2000,4000",
}

PLOT_KINDS = ("setpoint", "gamma", "explore", "perturb")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file (unset keys take defaults)")
    common.add_argument("--preset", choices=("paper", "desk"), help="scale preset applied before --config overrides")
    common.add_argument("--seed", type=int, help="first seed (default: from config)")
    common.add_argument("--seeds", type=int, help="number of seeds per setting")
    common.add_argument("--steps", type=int, help="total steps; the deviation window becomes the second half")
    common.add_argument("--agent", choices=("mono", "monolithic", "modular", "gmq", "both"), help="agent kind(s)")
    common.add_argument("--anneal", type=int, help="epsilon annealing steps K")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    common.add_argument("--stride", type=int, help="time-course CSV row stride")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory (default ./results)")
    common.add_argument("-v", "--verbose", action="store_true", help="log each run")

    parser = argparse.ArgumentParser(prog="homeorl", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("run", parents=[common], help="train agent(s) for one episode")
    for name, what in (("sweep-setpoint", "set-points"), ("sweep-gamma", "discount factors"),
                       ("sweep-explore", "annealing lengths")):
        p = sub.add_parser(name, parents=[common], help=f"sweep over {what}")
        p.add_argument("--values", type=_float_list, default=None,
                       help=f"comma-separated {what} (default {DEFAULT_VALUES[name]})")
    p = sub.add_parser("perturb", parents=[common], help="clamp a stat mid-run, both agents")
    p.add_argument("--stat", type=int, default=3, help="0-based index of the clamped stat (default 3)")
    p.add_argument("--value", type=float, default=20.0, help="clamp value (default 20)")
    p.add_argument("--at", type=int, help="clamp step (default 15000 paper, 6000 desk)")
    p = sub.add_parser("plot", help="redraw figures from a results directory")
    p.add_argument("--input", type=Path, required=True, help="directory holding sweep.csv")
    p.add_argument("--kind", choices=PLOT_KINDS, help="figure kind (default: from sweep.csv)")
    p.add_argument("--out", type=Path, help="where to write SVGs (default: --input)")
    p = sub.add_parser("verify", help="parameter counts and gradient check")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def load_config(args) -> RunConfig:
    if args.config is not None:
        config = parse_config(args.config)
        if args.preset is not None and args.preset != config.preset:
            config = preset_config(args.preset, **_explicit_fields(args.config))
    else:
        config = preset_config(args.preset or "paper")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.steps is not None:
        changes.update(
            total_steps=args.steps,
            delta_window=(args.steps // 2, args.steps),
            final_window=min(config.final_window, args.steps),
            anneal_steps=min(args.anneal or config.anneal_steps, args.steps),
        )
    if args.anneal is not None:
        changes["anneal_steps"] = args.anneal
    if args.stride is not None:
        changes["log_stride"] = args.stride
    if args.agent is not None and args.agent != "both":
        changes["agent_kind"] = AGENT_ALIASES[args.agent]
    return config.replace(**changes) if changes else config


def _explicit_fields(path: Path) -> dict:
    # keys the file sets explicitly, so --preset can be layered underneath them
    parsed = parse_config(path)
    keys = {line.split("=", 1)[0].strip() for line in path.read_text(encoding="utf-8").splitlines()
            if "=" in line.split("#", 1)[0]}
    keys.discard("preset")
    return {k: getattr(parsed, k) for k in keys}


def _agent_kinds(args, config: RunConfig) -> list[str]:
    if args.agent == "both":
        return ["monolithic", "modular"]
    return [config.agent_kind]


def _seed_count(args, config: RunConfig) -> int:
    if args.seeds is not None:
        return args.seeds
    return DESK_SEEDS if config.preset == "desk" else 1


def _prepare_out(out: Path, config: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(serialize_config(config), encoding="utf-8")


def _merge(results: Sequence[harness.SweepResult]) -> harness.SweepResult:
    merged = harness.SweepResult()
    for r in results:
        merged.records.extend(r.records)
        merged.failures.extend(r.failures)
    return merged


def _report(result: harness.SweepResult, metric: str = "delta") -> None:
    for (setting, agent), agg in result.aggregate(metric).items():
        print(f"  setting={setting:g} agent={agent}: median {metric}={agg.median:.4f} "
              f"(q1 {agg.q1:.4f}, q3 {agg.q3:.4f}, n={agg.n})")
    for f in result.failures:
        print(f"  DIVERGED: {f}", file=sys.stderr)


def cmd_run(args) -> int:
    config = load_config(args)
    _prepare_out(args.out, config)
    result = harness.SweepResult()
    for kind in _agent_kinds(args, config):
        c = config.replace(agent_kind=kind)
        try:
            run = harness.run_episode(c)
        except DivergenceError as exc:
            result.failures.append(str(exc))
            continue
        write_timecourse_csv(run, args.out / f"timecourse_{kind}_seed{c.seed}.csv", c.log_stride)
        result.records.append(harness.SweepRecord(
            "run", 0.0, kind, c.seed,
            harness.compute_delta(run, *c.delta_window, c.setpoints),
            harness.final_stat_mean(run, c.final_window),
        ))
    write_sweep_csv(result, args.out / "summary.csv")
    _report(result)
    return 0 if not result.failures else 1


def cmd_sweep(args) -> int:
    config = load_config(args)
    seeds = _seed_count(args, config)
    values = args.values if args.values is not None else _float_list(DEFAULT_VALUES[args.command])
    _prepare_out(args.out, config)
    if args.command == "sweep-explore":
        both = args.agent in (None, "both")
        result = harness.sweep_exploration(config, [int(v) for v in values], seeds, both_agents=both,
                                           workers=args.workers)
        kind = "explore"
    else:
        fn = harness.sweep_setpoints if args.command == "sweep-setpoint" else harness.sweep_gamma
        result = _merge([fn(config.replace(agent_kind=k), values, seeds, workers=args.workers)
                         for k in _agent_kinds(args, config)])
        kind = "setpoint" if args.command == "sweep-setpoint" else "gamma"
    write_sweep_csv(result, args.out / "sweep.csv")
    if result.records:
        emit_plots(result, kind, args.out, config)
    _report(result, "final_stat_mean" if kind == "setpoint" else "delta")
    return 0 if not result.failures else 1


def cmd_perturb(args) -> int:
    config = load_config(args)
    seeds = _seed_count(args, config)
    _prepare_out(args.out, config)
    res = harness.perturbation_experiment(config, seeds, workers=args.workers, stat_index=args.stat,
                                          value=args.value, perturb_time=args.at)
    write_sweep_csv(res.sweep, args.out / "sweep.csv")
    for kind, kind_logs in res.logs.items():
        for run in kind_logs:
            write_timecourse_csv(run, args.out / f"timecourse_{kind}_seed{run.config.seed}.csv", config.log_stride)
    if res.sweep.records:
        emit_plots(res.sweep, "perturb", args.out, config)
    _report(res.sweep)
    mono, mod = res.paired_deltas()
    if len(mono):
        print(f"  modular below monolithic in {int(np.sum(mod < mono))}/{len(mono)} paired seeds")
    return 0 if not res.sweep.failures else 1


def _timecourses_from_dir(directory: Path) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    courses = {}
    for kind in ("monolithic", "modular"):
        files = sorted(directory.glob(f"timecourse_{kind}_seed*.csv"))
        if not files:
            continue
        tables = [read_timecourse_csv(f) for f in files]
        stack = np.stack([tb["stats"] for tb in tables])
        courses[kind] = (tables[0]["t"], stack.mean(axis=0), stack.std(axis=0))
    return courses


def emit_plots(result: harness.SweepResult, kind: str, out: Path, config: RunConfig | None = None) -> list[Path]:
    """Write the SVG figure(s) for one experiment kind; returns the paths."""
    if not result.records:
        raise ValueError("no results to plot")
    out = Path(out)
    written = []
    if kind == "setpoint":
        path = out / "setpoint.svg"
        path.write_text(plots.setpoint_figure(result.records), encoding="utf-8")
        written.append(path)
    elif kind in ("gamma", "explore"):
        xlabel = "discount factor" if kind == "gamma" else "epsilon annealing steps"
        path = out / f"{kind}.svg"
        path.write_text(plots.boxplot_figure(result.records, "delta", xlabel=xlabel), encoding="utf-8")
        written.append(path)
    elif kind == "perturb":
        courses = _timecourses_from_dir(out)
        if not courses:
            raise ValueError(f"no time-course CSVs found in {out}")
        setpoint = float(np.mean(config.setpoints)) if config is not None else 5.0
        tp = result.records[0].setting
        path = out / "perturb_timecourse.svg"
        path.write_text(plots.timecourse_figure(courses, setpoint, tp), encoding="utf-8")
        written.append(path)
        path = out / "perturb_delta.svg"
        path.write_text(plots.boxplot_figure(result.records, "delta", xlabel="clamp step",
                                             ylabel="post-clamp deviation (unclamped stats)"), encoding="utf-8")
        written.append(path)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    return written


def cmd_plot(args) -> int:
    src = args.input
    result = read_sweep_csv(src / "sweep.csv")
    kind = args.kind or (result.records[0].experiment if result.records else None)
    if kind not in PLOT_KINDS:
        print(f"cannot infer plot kind from {src / 'sweep.csv'}; pass --kind", file=sys.stderr)
        return 2
    config = parse_config(src / "config.toml") if (src / "config.toml").exists() else None
    out = args.out or src
    out.mkdir(parents=True, exist_ok=True)
    if kind == "perturb" and out != src:
        # time-courses live beside sweep.csv
        courses = _timecourses_from_dir(src)
        setpoint = float(np.mean(config.setpoints)) if config else 5.0
        (out / "perturb_timecourse.svg").write_text(
            plots.timecourse_figure(courses, setpoint, result.records[0].setting), encoding="utf-8")
        paths = [out / "perturb_timecourse.svg"]
    else:
        paths = emit_plots(result, kind, out, config)
    for p in paths:
        print(p)
    return 0


def cmd_verify(args) -> int:
    mono = parameter_count((40, 1024, 1024, 4))
    modular = 4 * parameter_count((40, 500, 500, 4))
    print(f"monolithic 40-1024-1024-4 parameters: {mono:,}")
    print(f"modular 4 x 40-500-500-4 parameters: {modular:,}")
    report = gradient_check(trials=args.trials, seed=args.seed)
    ok = report.max_rel_error < 1e-4
    print(f"gradient check: {report.trials} trials, max relative error {report.max_rel_error:.3e} "
          f"({'PASS' if ok else 'FAIL'} at 1e-4)")
    # both agents truncate to 1.09e6 at three significant figures
    counts_ok = mono // 10_000 == 109 and modular // 10_000 == 109
    return 0 if ok and counts_ok else 1


COMMANDS = {
    "run": cmd_run,
    "sweep-setpoint": cmd_sweep,
    "sweep-gamma": cmd_sweep,
    "sweep-explore": cmd_sweep,
    "perturb": cmd_perturb,
    "plot": cmd_plot,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"homeorl: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
