"""Plain SVG line charts for benchmark summaries (no plotting dependency)."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Sequence
from xml.sax.saxutils import escape

if TYPE_CHECKING:
    from .bench import BenchSummary

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

WIDTH, HEIGHT = 760, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 180, 40, 60


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + step * 1e-9:
        out.append(v)
        v += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.1e}"
    return f"{v:g}"


def line_chart(
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
) -> str:
    """One polyline per named series, with a circle at every data point."""
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y: float) -> float:
        return MARGIN_T + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}" stroke="#333"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}" stroke="#333"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        out.append(
            f'<text class="tick" x="{sx(t):.1f}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        out.append(
            f'<line x1="{MARGIN_L}" y1="{sy(t):.1f}" x2="{MARGIN_L + pw}" y2="{sy(t):.1f}" stroke="#eee"/>'
        )
        out.append(
            f'<text class="tick" x="{MARGIN_L - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{_fmt(t)}</text>'
        )
    out.append(
        f'<text class="xlabel" x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text class="ylabel" x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (name, pts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        label = escape(name, {'"': "&quot;"})
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<g class="series" data-name="{label}">')
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle class="pt" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}"/>')
        out.append("</g>")
        if i < 24:
            ly = MARGIN_T + 12 * i
            out.append(
                f'<text class="legend" x="{WIDTH - MARGIN_R + 10}" y="{ly + 4}" fill="{color}">{escape(name)}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_all(summary: "BenchSummary") -> dict[str, str]:
    """The three figure families, keyed by file name."""
    rates = summary.rates
    mean_err = line_chart(
        "Mean NN distance error over all trajectories",
        "sampling rate 1/k (k)",
        "mean error (m)",
        [("mean", [(k, summary.per_rate[k].mean_error_m) for k in rates])],
    )
    per_traj_err = []
    per_traj_rel = []
    per_traj_time = []
    for tid, recs in summary.per_trajectory.items():
        label = f"{tid} ({recs[0].n_points_full} pts)"
        per_traj_err.append((label, [(r.rate_k, r.error_m) for r in recs]))
        if recs[0].length_m > 0:
            label_len = f"{tid} ({recs[0].length_m / 1000:.2f} km)"
            per_traj_rel.append((label_len, [(r.rate_k, r.rel_error or 0.0) for r in recs]))
        per_traj_time.append(
            (label, [(r.n_points_sampled, r.elapsed_sampled_ns / 1e6) for r in recs])
        )
    out = {
        "mean_error.svg": mean_err,
        "error_by_trajectory.svg": line_chart(
            "NN distance error per trajectory", "sampling rate 1/k (k)", "error (m)", per_traj_err
        ),
        "elapsed.svg": line_chart(
            "NN search time vs sample size", "points in sample", "elapsed (ms)", per_traj_time
        ),
    }
    if per_traj_rel:
        out["rel_error.svg"] = line_chart(
            "Error relative to trajectory length", "sampling rate 1/k (k)", "error / length", per_traj_rel
        )
    return out
