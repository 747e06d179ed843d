"""Map-of-rules figure rendering.

Figures go through matplotlib's SVG backend with a pinned hash salt and no
creation date, so identical embeddings produce byte-identical files run
after run. Text is kept as SVG text (fonttype: none) rather than glyph
paths.
"""

from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib
from matplotlib.figure import Figure

from .pipeline import Embedding
from .rules import RULE_LABELS, RuleId

__all__ = ["convex_hull", "render_map"]

_SVG_RC = {"svg.hashsalt": "committee-atlas", "svg.fonttype": "none"}


def convex_hull(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain convex hull, counterclockwise without the closing point."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def render_map(
    emb: Embedding,
    labels: Mapping[RuleId, str] | None = None,
    highlight: Sequence[RuleId] = (),
    title: str | None = None,
) -> bytes:
    """Render one labeled marker per rule, optionally shading the convex hull
    of the highlighted rules, and return the SVG bytes."""
    labels = labels if labels is not None else RULE_LABELS
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.4, 6.4))
        ax = fig.add_subplot()
        xs = [x for x, _ in emb.coordinates]
        ys = [y for _, y in emb.coordinates]

        if highlight:
            hull_pts = convex_hull([emb.coordinate(rule) for rule in highlight])
            if len(hull_pts) >= 3:
                ax.fill(
                    [x for x, _ in hull_pts],
                    [y for _, y in hull_pts],
                    color="red",
                    alpha=0.15,
                    zorder=0,
                )
            elif len(hull_pts) == 2:
                ax.plot(
                    [hull_pts[0][0], hull_pts[1][0]],
                    [hull_pts[0][1], hull_pts[1][1]],
                    color="red",
                    alpha=0.3,
                    linewidth=6,
                    zorder=0,
                )

        ax.scatter(xs, ys, s=40, color="#1f4e9c", zorder=2)
        for rule, (x, y) in zip(emb.rules, emb.coordinates):
            ax.annotate(
                labels.get(rule, rule.value),
                (x, y),
                textcoords="offset points",
                xytext=(4, 4),
                fontsize=9,
            )
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xticks([])
        ax.set_yticks([])
        for side in ax.spines.values():
            side.set_visible(False)
        if title:
            ax.set_title(title)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None}, bbox_inches="tight")
    return buf.getvalue()
