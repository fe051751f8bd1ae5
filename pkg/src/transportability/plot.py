"""Self-contained SVG box plot of replication estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import InsufficientReplications
from .harness import METHOD_ORDER, ReplicationSummary, quantile

LABELS = {
    "naive": "Mean difference",
    "interaction_ols": "Interaction OLS",
    "ipsw": "IPSW",
    "gformula": "Plug-in g-formula",
}

WIDTH, HEIGHT = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 100, 30, 60
BOX_HALF = 40


@dataclass(frozen=True)
class BoxStats:
    q25: float
    median: float
    q75: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_stats(values) -> BoxStats:
    """Tukey box: whiskers reach the most extreme points within 1.5 IQR of the box."""
    v = np.sort(np.asarray(values, dtype=float))
    q25, med, q75 = (quantile(v, q) for q in (0.25, 0.5, 0.75))
    iqr = q75 - q25
    lo_fence, hi_fence = q25 - 1.5 * iqr, q75 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(v[(v < lo_fence) | (v > hi_fence)].tolist())
    return BoxStats(q25, med, q75, float(inside.min()), float(inside.max()), outliers)


def _nice_step(span: float, target_ticks: int = 6) -> float:
    raw = span / target_ticks
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            return mult * mag
    return 10 * mag


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_boxplot_svg(summary: ReplicationSummary, title: str | None = None) -> str:
    if summary.replications < 5:
        raise InsufficientReplications(f"need >= 5 replications for a box plot, got {summary.replications}")

    stats = [box_stats(summary.per_method[m].estimates) for m in METHOD_ORDER]
    # the axis spans whiskers and reference; outliers far beyond are pinned to the edge
    span_vals = [v for b in stats for v in (b.whisker_low, b.whisker_high)] + [summary.true_tau]
    lo, hi = min(span_vals), max(span_vals)
    pad = 0.5 * (hi - lo)
    out_vals = [o for b in stats for o in b.outliers]
    lo = min([lo] + [o for o in out_vals if o >= lo - pad])
    hi = max([hi] + [o for o in out_vals if o <= hi + pad])
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    step = _nice_step(hi - lo)
    lo = math.floor(lo / step) * step
    hi = math.ceil(hi / step) * step

    plot_h = HEIGHT - TOP - BOTTOM
    plot_w = WIDTH - LEFT - RIGHT

    def ypos(v: float) -> float:
        return TOP + (hi - v) / (hi - lo) * plot_h

    slot = plot_w / len(METHOD_ORDER)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')

    # y axis with ticks
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>')
    n_ticks = int(round((hi - lo) / step))
    for k in range(n_ticks + 1):
        v = lo + k * step
        y = _f(ypos(v))
        out.append(f'<line x1="{LEFT - 5}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{y}" x2="{WIDTH - RIGHT}" y2="{y}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{v:g}</text>')
    out.append(
        f'<text x="16" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + plot_h / 2:.2f})">Estimated ATE</text>'
    )
    out.append(f'<line x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>')
    out.append(
        f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">Estimation method</text>'
    )

    for i, (method, b) in enumerate(zip(METHOD_ORDER, stats)):
        cx = LEFT + slot * (i + 0.5)
        x0, x1 = _f(cx - BOX_HALF), _f(cx + BOX_HALF)
        c = _f(cx)
        out.append(f'<g class="box" data-method="{method.value}">')
        out.append(f'<line x1="{c}" y1="{_f(ypos(b.whisker_high))}" x2="{c}" y2="{_f(ypos(b.q75))}" stroke="black"/>')
        out.append(f'<line x1="{c}" y1="{_f(ypos(b.q25))}" x2="{c}" y2="{_f(ypos(b.whisker_low))}" stroke="black"/>')
        for w in (b.whisker_low, b.whisker_high):
            out.append(
                f'<line x1="{_f(cx - BOX_HALF / 2)}" y1="{_f(ypos(w))}" x2="{_f(cx + BOX_HALF / 2)}" '
                f'y2="{_f(ypos(w))}" stroke="black"/>'
            )
        out.append(
            f'<rect x="{x0}" y="{_f(ypos(b.q75))}" width="{2 * BOX_HALF}" '
            f'height="{_f(ypos(b.q25) - ypos(b.q75))}" fill="#9ecae1" stroke="black"/>'
        )
        out.append(
            f'<line x1="{x0}" y1="{_f(ypos(b.median))}" x2="{x1}" y2="{_f(ypos(b.median))}" '
            f'stroke="black" stroke-width="2"/>'
        )
        for o in b.outliers:
            if lo <= o <= hi:
                out.append(f'<circle cx="{c}" cy="{_f(ypos(o))}" r="3" fill="none" stroke="black"/>')
        for side in ("high", "low"):
            far = sorted(o for o in b.outliers if (o > hi if side == "high" else o < lo))
            if not far:
                continue
            edge, tip = (TOP + 4, -4) if side == "high" else (HEIGHT - BOTTOM - 4, 4)
            out.append(
                f'<path class="offscale" d="M {_f(cx - 4)} {_f(edge - tip)} L {_f(cx + 4)} {_f(edge - tip)} '
                f'L {c} {_f(edge + tip)} Z" fill="black"/>'
            )
            label = ", ".join(f"{o:.1f}" for o in far)
            out.append(f'<text x="{_f(cx + 8)}" y="{_f(edge)}" dominant-baseline="middle" font-size="10">{label}</text>')
        out.append("</g>")
        out.append(
            f'<text x="{c}" y="{HEIGHT - BOTTOM + 18}" text-anchor="middle">{escape(LABELS[method.value])}</text>'
        )

    ty = _f(ypos(summary.true_tau))
    out.append(
        f'<line class="reference" x1="{LEFT}" y1="{ty}" x2="{WIDTH - RIGHT}" y2="{ty}" '
        f'stroke="red" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    out.append(
        f'<text x="{WIDTH - RIGHT + 6}" y="{ty}" dominant-baseline="middle" '
        f'fill="red">true ATE {summary.true_tau:g}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
