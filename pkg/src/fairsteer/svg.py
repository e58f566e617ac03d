"""Self-contained SVG figures for before/after steering comparisons.

The figure shows two panels of subgroup density curves (before on the left,
after on the right), vertical rules at the finite decision boundaries of
each group, and a small annotation block with the headline metrics. Curves
are sampled once on a shared grid of 512 points covering every subgroup's
mean plus or minus five standard deviations; the same sampled points back
both the CSV table and the SVG, so the CSV is the figure's source of truth.

No plotting library is involved: the renderer emits SVG 1.1 primitives
(polyline, line, text, rect) directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any
from xml.sax.saxutils import escape

import numpy as np

from .distributions import FairDistribution
from .errors import InputValidationError

__all__ = ["DensityCurves", "build_curves", "curves_to_csv", "render_svg"]

N_CURVE_POINTS = 512
ENVELOPE_SIGMAS = 5.0

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


@dataclass(frozen=True)
class DensityCurves:
    """Sampled subgroup densities on a shared grid.

    Series are keyed by (phase, class, group) where phase is "before" or
    "after"; all series share ``xs``.
    """

    xs: np.ndarray
    series: dict[tuple[str, Any, Any], np.ndarray]

    def __post_init__(self) -> None:
        for key, ys in self.series.items():
            if ys.shape != self.xs.shape:
                raise InputValidationError(f"series {key!r} does not match the grid")


def _envelope(dists: tuple[FairDistribution, ...]) -> tuple[float, float]:
    lo = float("inf")
    hi = float("-inf")
    for dist in dists:
        for g in dist.subgroups.values():
            lo = min(lo, g.mean - ENVELOPE_SIGMAS * g.std)
            hi = max(hi, g.mean + ENVELOPE_SIGMAS * g.std)
    return lo, hi


def build_curves(
    before: FairDistribution,
    after: FairDistribution,
    n_points: int = N_CURVE_POINTS,
) -> DensityCurves:
    """Sample every subgroup density of both distributions on one grid."""
    if not (before.is_univariate and after.is_univariate):
        raise InputValidationError("density curves are defined for univariate models only")
    if n_points < 2:
        raise InputValidationError("n_points must be at least 2")
    lo, hi = _envelope((before, after))
    xs = np.linspace(lo, hi, n_points)
    series: dict[tuple[str, Any, Any], np.ndarray] = {}
    for phase, dist in (("before", before), ("after", after)):
        for (i, a), g in dist.subgroups.items():
            series[(phase, i, a)] = np.exp(g.logpdf(xs))
    return DensityCurves(xs, series)


def _column_name(key: tuple[str, Any, Any]) -> str:
    phase, i, a = key
    return f"{phase}_{i}_{a}"


def curves_to_csv(curves: DensityCurves) -> tuple[str, list[str]]:
    """Render the sampled curves as (header, data rows)."""
    keys = sorted(curves.series, key=lambda k: (k[0] == "after", str(k[1]), str(k[2])))
    header = ",".join(["x"] + [_column_name(key) for key in keys])
    columns = [curves.series[key] for key in keys]
    rows = []
    for idx, x in enumerate(curves.xs):
        cells = [repr(float(x))] + [repr(float(col[idx])) for col in columns]
        rows.append(",".join(cells))
    return header, rows


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_WIDTH = 960
_HEIGHT = 440
_PANEL_W = 408
_PANEL_H = 250
_PANEL_TOP = 64
_PANEL_LEFT = {"before": 48, "after": 512}


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _panel(
    name: str,
    curves: DensityCurves,
    colors: dict[tuple[Any, Any], str],
    thresholds: dict[Any, tuple[float, ...]],
    y_max: float,
) -> list[str]:
    left = _PANEL_LEFT[name]
    top = _PANEL_TOP
    xs = curves.xs
    lo, hi = float(xs[0]), float(xs[-1])
    span = hi - lo if hi > lo else 1.0

    def sx(x: float) -> float:
        return left + (x - lo) / span * _PANEL_W

    def sy(y: float) -> float:
        return top + _PANEL_H - y / y_max * (_PANEL_H - 8)

    parts = [
        f'<rect x="{left}" y="{top}" width="{_PANEL_W}" height="{_PANEL_H}" '
        'fill="none" stroke="#444444" stroke-width="1"/>',
        f'<text x="{left + _PANEL_W / 2:.1f}" y="{top - 10}" text-anchor="middle" '
        f'font-size="14" fill="#222222">{escape(name)}</text>',
    ]
    for group, cuts in sorted(thresholds.items(), key=lambda kv: str(kv[0])):
        for cut in cuts:
            if not np.isfinite(cut) or not (lo <= cut <= hi):
                continue
            x = sx(float(cut))
            parts.append(
                f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + _PANEL_H}" '
                'stroke="#888888" stroke-width="1" stroke-dasharray="4,3"/>'
            )
            parts.append(
                f'<text x="{x + 3:.2f}" y="{top + 14}" font-size="10" '
                f'fill="#666666">{escape(str(group))}</text>'
            )
    for (phase, i, a), ys in sorted(curves.series.items(), key=lambda kv: str(kv[0])):
        if phase != name:
            continue
        points = " ".join(
            f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" '
            f'stroke="{colors[(i, a)]}" stroke-width="1.6"/>'
        )
    for tick in (lo, 0.5 * (lo + hi), hi):
        x = sx(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{top + _PANEL_H}" x2="{x:.2f}" '
            f'y2="{top + _PANEL_H + 5}" stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{top + _PANEL_H + 18}" text-anchor="middle" '
            f'font-size="11" fill="#222222">{_fmt(tick)}</text>'
        )
    return parts


def render_svg(
    curves: DensityCurves,
    *,
    title: str,
    thresholds_before: dict[Any, tuple[float, ...]],
    thresholds_after: dict[Any, tuple[float, ...]],
    annotations: tuple[str, ...],
) -> str:
    """Build the full two-panel figure as an SVG document string."""
    cell_keys = sorted(
        {(i, a) for (_, i, a) in curves.series}, key=lambda k: (str(k[0]), str(k[1]))
    )
    colors = {
        key: _PALETTE[idx % len(_PALETTE)] for idx, key in enumerate(cell_keys)
    }
    y_max = max(float(np.max(ys)) for ys in curves.series.values())
    if y_max <= 0:
        y_max = 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" font-size="16" '
        f'fill="#111111">{escape(title)}</text>',
    ]
    parts.extend(_panel("before", curves, colors, thresholds_before, y_max))
    parts.extend(_panel("after", curves, colors, thresholds_after, y_max))

    legend_y = 40
    legend_x = 48.0
    for key in cell_keys:
        label = f"class {key[0]}, group {key[1]}"
        parts.append(
            f'<line x1="{legend_x:.1f}" y1="{legend_y}" x2="{legend_x + 22:.1f}" '
            f'y2="{legend_y}" stroke="{colors[key]}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 27:.1f}" y="{legend_y + 4}" font-size="11" '
            f'fill="#222222">{escape(label)}</text>'
        )
        legend_x += 36 + 7.0 * len(label)

    note_y = _PANEL_TOP + _PANEL_H + 44
    for line in annotations:
        parts.append(
            f'<text x="48" y="{note_y}" font-size="12" fill="#222222" '
            f'font-family="monospace">{escape(line)}</text>'
        )
        note_y += 17
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
