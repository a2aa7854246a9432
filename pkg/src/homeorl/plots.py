"""Dependency-free SVG 1.1 figures: identity scatter, boxplots, time-courses.

Every box group carries its summary numbers as ``data-*`` attributes so the
plotted values can be checked against the CSV they were drawn from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
AGENT_COLORS = {"monolithic": "#1f77b4", "modular": "#d62728", "random": "#7f7f7f"}
SETPOINT_COLOR = "#2ca02c"


def _f(x: float) -> str:
    return f"{x:.2f}"


class Svg:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.items: list[str] = []

    def add(self, raw: str) -> None:
        self.items.append(raw)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash: str | None = None) -> None:
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}" stroke-width="{width}"{d}/>')

    def rect(self, x, y, w, h, fill="none", stroke="#000") -> None:
        self.add(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}" stroke="{stroke}"/>')

    def circle(self, cx, cy, r=2.5, fill="#000", opacity=1.0) -> None:
        self.add(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{r}" fill="{fill}" fill-opacity="{opacity}"/>')

    def polyline(self, xs, ys, stroke="#000", width=1.0) -> None:
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def polygon(self, xs, ys, fill="#000", opacity=0.2) -> None:
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.add(f'<polygon points="{pts}" fill="{fill}" fill-opacity="{opacity}" stroke="none"/>')

    def text(self, x, y, s, size=11, anchor="middle", rotate: float | None = None) -> None:
        rot = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.add(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{rot}>{escape(str(s))}</text>'
        )

    def to_string(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


@dataclass
class Axes:
    """Linear data-to-pixel mapping for one panel."""

    x0: float
    y0: float
    w: float
    h: float
    xlim: tuple[float, float]
    ylim: tuple[float, float]

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (np.asarray(x, dtype=float) - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (np.asarray(y, dtype=float) - lo) / (hi - lo) * self.h

    def frame(self, svg: Svg, xlabel: str, ylabel: str, title: str = "", xticks=None, yticks=None) -> None:
        svg.rect(self.x0, self.y0, self.w, self.h)
        xticks = nice_ticks(*self.xlim) if xticks is None else xticks
        yticks = nice_ticks(*self.ylim) if yticks is None else yticks
        for v, label in _labelled(xticks):
            x = float(self.px(v))
            svg.line(x, self.y0 + self.h, x, self.y0 + self.h + 4)
            svg.text(x, self.y0 + self.h + 16, label, size=10)
        for v, label in _labelled(yticks):
            y = float(self.py(v))
            svg.line(self.x0 - 4, y, self.x0, y)
            svg.text(self.x0 - 7, y + 3.5, label, size=10, anchor="end")
        svg.text(self.x0 + self.w / 2, self.y0 + self.h + 34, xlabel, size=12)
        svg.text(self.x0 - 42, self.y0 + self.h / 2, ylabel, size=12, rotate=-90)
        if title:
            svg.text(self.x0 + self.w / 2, self.y0 - 10, title, size=13)


def _labelled(ticks):
    for t in ticks:
        if isinstance(t, tuple):
            yield t
        else:
            yield t, f"{t:g}"


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(round(v, 10)) for v in np.arange(start, hi + step * 1e-9, step)]


def _pad(lo: float, hi: float, frac: float = 0.06) -> tuple[float, float]:
    lo, hi = float(lo), float(hi)
    if hi == lo:
        return lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - frac * span, hi + frac * span


@dataclass(frozen=True)
class BoxStats:
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple[float, ...]


def box_stats(values: Sequence[float]) -> BoxStats:
    """Quartiles (linear interpolation) with 1.5 IQR whiskers clipped to the data."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("no values to summarise")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
    out = v[(v < q1 - 1.5 * iqr) | (v > q3 + 1.5 * iqr)]
    return BoxStats(float(q1), float(med), float(q3), float(inside.min()), float(inside.max()), tuple(map(float, out)))


def setpoint_figure(records, title: str = "Final stat level vs set-point") -> str:
    """Per-seed final stat means against the set-point, with an identity line."""
    xs = np.array([r.setting for r in records], dtype=float)
    ys = np.array([r.final_stat_mean for r in records], dtype=float)
    if xs.size == 0:
        raise ValueError("no set-point records to plot")
    lo = min(xs.min(), ys.min(), 0.0)
    hi = max(xs.max(), ys.max())
    lim = _pad(lo, hi)
    svg = Svg(420, 400)
    ax = Axes(70, 40, 320, 300, lim, lim)
    ax.frame(svg, "set-point h*", "mean stat level (final window)", title)
    svg.add(f'<g class="identity" data-lo="{lim[0]!r}" data-hi="{lim[1]!r}">')
    svg.line(float(ax.px(lim[0])), float(ax.py(lim[0])), float(ax.px(lim[1])), float(ax.py(lim[1])), stroke="#888", dash="4,3")
    svg.add("</g>")
    agents = sorted({r.agent for r in records})
    for k, agent in enumerate(agents):
        color = AGENT_COLORS.get(agent, PALETTE[k % len(PALETTE)])
        for r in records:
            if r.agent == agent:
                svg.circle(float(ax.px(r.setting)), float(ax.py(r.final_stat_mean)), fill=color, opacity=0.6)
        for s in sorted({r.setting for r in records if r.agent == agent}):
            med = float(np.median([r.final_stat_mean for r in records if r.agent == agent and r.setting == s]))
            x, y = float(ax.px(s)), float(ax.py(med))
            svg.line(x - 9, y, x + 9, y, stroke=color, width=2.5)
    _legend(svg, agents, 80, 52)
    return svg.to_string()


def _legend(svg: Svg, agents: Sequence[str], x: float, y: float) -> None:
    for k, agent in enumerate(agents):
        color = AGENT_COLORS.get(agent, PALETTE[k % len(PALETTE)])
        svg.rect(x, y + 16 * k - 8, 10, 10, fill=color, stroke=color)
        svg.text(x + 15, y + 16 * k + 1, agent, size=11, anchor="start")


def boxplot_figure(records, metric: str = "delta", xlabel: str = "setting", ylabel: str = "deviation per step",
                   title: str = "") -> str:
    """Grouped boxplots of ``metric`` per setting, one box per agent."""
    if not records:
        raise ValueError("no records to plot")
    settings = sorted({r.setting for r in records})
    agents = sorted({r.agent for r in records})
    vals = np.array([getattr(r, metric) for r in records], dtype=float)
    ylim = _pad(float(vals.min()), float(vals.max()))
    width = max(420, 90 + 70 * len(settings) * len(agents))
    svg = Svg(width, 400)
    ax = Axes(70, 40, width - 100, 300, (0.0, float(len(settings))), ylim)
    xticks = [(i + 0.5, f"{s:g}") for i, s in enumerate(settings)]
    ax.frame(svg, xlabel, ylabel, title, xticks=xticks)
    slot = 1.0 / (len(agents) + 1)
    for i, s in enumerate(settings):
        for k, agent in enumerate(agents):
            v = [getattr(r, metric) for r in records if r.setting == s and r.agent == agent]
            if not v:
                continue
            b = box_stats(v)
            color = AGENT_COLORS.get(agent, PALETTE[k % len(PALETTE)])
            cx = i + slot * (k + 1)
            half = slot * 0.35
            xl, xr, xc = float(ax.px(cx - half)), float(ax.px(cx + half)), float(ax.px(cx))
            svg.add(
                f'<g class="box" data-setting="{s!r}" data-agent="{agent}" data-q1="{b.q1!r}" '
                f'data-median="{b.median!r}" data-q3="{b.q3!r}" data-whisker-lo="{b.whisker_lo!r}" '
                f'data-whisker-hi="{b.whisker_hi!r}" data-n="{len(v)}">'
            )
            y1, y3 = float(ax.py(b.q1)), float(ax.py(b.q3))
            svg.rect(xl, y3, xr - xl, max(y1 - y3, 0.5), fill=color + "55", stroke=color)
            svg.line(xl, float(ax.py(b.median)), xr, float(ax.py(b.median)), stroke=color, width=2)
            svg.line(xc, y3, xc, float(ax.py(b.whisker_hi)), stroke=color)
            svg.line(xc, y1, xc, float(ax.py(b.whisker_lo)), stroke=color)
            for w in (b.whisker_lo, b.whisker_hi):
                svg.line(xc - (xr - xl) / 4, float(ax.py(w)), xc + (xr - xl) / 4, float(ax.py(w)), stroke=color)
            for o in b.outliers:
                svg.circle(xc, float(ax.py(o)), r=2.2, fill=color)
            svg.add("</g>")
    _legend(svg, agents, ax.x0 + ax.w - 110, 52)
    return svg.to_string()


def timecourse_figure(
    courses: Mapping[str, tuple[np.ndarray, np.ndarray, np.ndarray]],
    setpoint: float,
    perturb_time: float | None = None,
    title: str = "Stat time-courses",
) -> str:
    """One panel per agent: mean stat trajectories with +-sd shading.

    ``courses`` maps agent -> (t, mean (T, N), sd (T, N)).
    """
    if not courses:
        raise ValueError("no time-courses to plot")
    agents = list(courses)
    lo = min(float((m - s).min()) for _, m, s in courses.values())
    hi = max(float((m + s).max()) for _, m, s in courses.values())
    ylim = _pad(min(lo, setpoint), max(hi, setpoint))
    tmax = max(float(t[-1]) for t, _, _ in courses.values())
    svg = Svg(460 * len(agents), 380)
    for p, agent in enumerate(agents):
        t, mean, sd = courses[agent]
        ax = Axes(70 + 460 * p, 40, 360, 280, (0.0, max(tmax, 1.0)), ylim)
        ax.frame(svg, "step", "stat level", f"{title}: {agent}")
        for i in range(mean.shape[1]):
            color = PALETTE[i % len(PALETTE)]
            xs = ax.px(t)
            svg.polygon(np.concatenate([xs, xs[::-1]]),
                        np.concatenate([ax.py(mean[:, i] + sd[:, i]), ax.py((mean[:, i] - sd[:, i])[::-1])]),
                        fill=color, opacity=0.18)
            svg.polyline(xs, ax.py(mean[:, i]), stroke=color, width=1.2)
        svg.add(f'<g class="setpoint" data-value="{float(setpoint)!r}">')
        y = float(ax.py(setpoint))
        svg.line(ax.x0, y, ax.x0 + ax.w, y, stroke=SETPOINT_COLOR, width=1.5)
        svg.add("</g>")
        if perturb_time is not None:
            x = float(ax.px(perturb_time))
            svg.line(x, ax.y0, x, ax.y0 + ax.h, stroke="#444", dash="3,3")
        for i in range(mean.shape[1]):
            svg.text(ax.x0 + ax.w - 28, ax.y0 + 16 + 14 * i, f"h{i + 1}", size=10, anchor="start")
            svg.line(ax.x0 + ax.w - 44, ax.y0 + 12 + 14 * i, ax.x0 + ax.w - 32, ax.y0 + 12 + 14 * i,
                     stroke=PALETTE[i % len(PALETTE)], width=2)
    return svg.to_string()
