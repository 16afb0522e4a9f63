"""Minimal deterministic SVG step plots for score-over-time curves.

Hand-rolled paths and axis ticks; no plotting dependency. Output bytes are
a pure function of the input series, so plots can be diffed across runs.
"""

from __future__ import annotations

from .metrics import Curve

WIDTH, HEIGHT = 720, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 170, 30, 50

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _step_path(curve: Curve, x_of, y_of) -> str:
    parts = [f"M {_fmt(x_of(0.0))} {_fmt(y_of(curve.value_at(0.0)))}"]
    for x, score in curve.points:
        parts.append(f"H {_fmt(x_of(x))}")
        parts.append(f"V {_fmt(y_of(score))}")
    parts.append(f"H {_fmt(x_of(100.0))}")
    return " ".join(parts)


def render_step_plot(series: list[tuple[str, Curve]], title: str = "",
                     y_label: str = "Rouge-1 F1", x_label: str = "% of meeting") -> str:
    """Render named curves as one multi-series SVG step plot."""
    y_max = 10.0
    for _, curve in series:
        for _, score in curve.points:
            y_max = max(y_max, score)
    y_max = float(int(y_max // 10 + 1) * 10)

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def x_of(pct: float) -> float:
        return MARGIN_LEFT + pct / 100.0 * plot_w

    def y_of(score: float) -> float:
        return MARGIN_TOP + (1.0 - score / y_max) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    # axes
    out.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + plot_h}" x2="{MARGIN_LEFT + plot_w}" '
        f'y2="{MARGIN_TOP + plot_h}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{MARGIN_TOP + plot_h}" stroke="black"/>'
    )
    for pct in range(0, 101, 20):
        x = x_of(float(pct))
        out.append(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_TOP + plot_h}" x2="{_fmt(x)}" '
            f'y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{MARGIN_TOP + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{pct}</text>'
        )
    tick = y_max / 5
    for i in range(6):
        score = i * tick
        y = y_of(score)
        out.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{_fmt(y)}" x2="{MARGIN_LEFT}" '
            f'y2="{_fmt(y)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(score)}</text>'
        )
    out.append(
        f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    out.append(
        f'<text x="16" y="{_fmt(MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_fmt(MARGIN_TOP + plot_h / 2)})">{y_label}</text>'
    )
    # series + legend
    for i, (name, curve) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        out.append(
            f'<path d="{_step_path(curve, x_of, y_of)}" fill="none" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        legend_y = MARGIN_TOP + 14 + 18 * i
        legend_x = MARGIN_LEFT + plot_w + 12
        out.append(
            f'<line x1="{legend_x}" y1="{legend_y - 4}" x2="{legend_x + 18}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{legend_x + 24}" y="{legend_y}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
