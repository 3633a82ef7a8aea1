"""Lane diagrams of negotiations rendered with matplotlib.

Each process is a vertical lane; each node is a horizontal bar across
the lanes of its domain, placed at its layer. Edges follow their process
lane downwards; arcs going back up are drawn curved.
"""
from __future__ import annotations

from collections import deque
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import FancyArrowPatch  # noqa: E402

from .dot import HIGHLIGHT, witness_marks  # noqa: E402
from .graph import graph_of, topo_order  # noqa: E402
from .model import Negotiation, PreconditionError, classify  # noqa: E402

LANE_GAP = 1.6
LAYER_GAP = 1.0
BAR_HEIGHT = 0.36


def _placement_order(neg: Negotiation) -> list[str]:
    """Topological order when acyclic, breadth-first order from the initial node otherwise."""
    if classify(neg).acyclic:
        return list(topo_order(neg))
    succ = graph_of(neg).succ
    seen = {neg.init: None}
    queue = deque([neg.init])
    while queue:
        for e in succ[queue.popleft()]:
            if e.dst not in seen:
                seen[e.dst] = None
                queue.append(e.dst)
    order = [n for n in seen if n != neg.fin]
    order += [n for n in neg.nodes if n not in seen and n != neg.fin]
    return order + [neg.fin]


def layers(neg: Negotiation) -> dict[str, int]:
    """Row of each node: below every earlier neighbour, and clear of bars it would overlap."""
    lane = {p: i for i, p in enumerate(neg.processes)}
    span = {n: (min(lane[p] for p in neg.dom[n]), max(lane[p] for p in neg.dom[n])) for n in neg.nodes}
    pred = graph_of(neg).pred
    row: dict[str, int] = {}
    taken: dict[int, list[tuple[int, int]]] = {}
    order = _placement_order(neg)
    for n in order:
        r = max((row[e.src] + 1 for e in pred[n] if e.src in row), default=0)
        if n == neg.fin:
            r = max(r, max(row.values(), default=-1) + 1)
        lo, hi = span[n]
        while any(lo <= h and l <= hi for l, h in taken.get(r, ())):
            r += 1
        row[n] = r
        taken.setdefault(r, []).append((lo, hi))
    return row


def draw(neg: Negotiation, ax, witness: object = None, title: str | None = None) -> None:
    marks = witness_marks(neg, witness)
    layer = layers(neg)
    lane = {p: i * LANE_GAP for i, p in enumerate(neg.processes)}
    depth = max(layer.values())
    for p, x in lane.items():
        ax.plot([x, x], [0.5, -depth * LAYER_GAP - 0.5], color="0.85", lw=1, zorder=0)
        ax.text(x, 0.75, p, ha="center", va="bottom", fontsize=9)
    for n in neg.nodes:
        y = -layer[n] * LAYER_GAP
        xs = [lane[p] for p in neg.dom[n]]
        hot = n in marks.nodes
        colour = HIGHLIGHT if hot else "0.35"
        ax.add_patch(plt.Rectangle((min(xs) - 0.3, y - BAR_HEIGHT / 2), max(xs) - min(xs) + 0.6,
                                   BAR_HEIGHT, facecolor="white", edgecolor=colour,
                                   lw=2.2 if hot else 1.2, zorder=3))
        ax.scatter(xs, [y] * len(xs), s=14, color=colour, zorder=4)
        weight = "bold" if n in (neg.init, neg.fin) else "normal"
        ax.text(min(xs) - 0.38, y, n, ha="right", va="center", fontsize=8, weight=weight)
    for e in graph_of(neg).edges:
        x = lane[e.proc]
        y0, y1 = -layer[e.src] * LAYER_GAP, -layer[e.dst] * LAYER_GAP
        hot = e in marks.edges
        down = y1 < y0
        start = (x, y0 - BAR_HEIGHT / 2) if down else (x + 0.1, y0 - BAR_HEIGHT / 2)
        end = (x, y1 + BAR_HEIGHT / 2) if down else (x + 0.1, y1 - BAR_HEIGHT / 2)
        ax.add_patch(FancyArrowPatch(
            start, end, arrowstyle="-|>", mutation_scale=9,
            connectionstyle="arc3,rad=0" if down else "arc3,rad=-0.6",
            color=HIGHLIGHT if hot else "0.45", lw=1.8 if hot else 0.9,
            linestyle="--" if len(neg.delta[(e.src, e.result, e.proc)]) > 1 else "-", zorder=2))
        label_y = y0 - BAR_HEIGHT / 2 - 0.22 if down else (y0 + y1) / 2
        ax.text(x + 0.08, label_y, e.result, fontsize=7, color=HIGHLIGHT if hot else "0.3",
                ha="left", va="center")
    xs = list(lane.values())
    ax.set_xlim(min(xs) - 1.4, max(xs) + 1.2)
    ax.set_ylim(-depth * LAYER_GAP - 0.8, 1.2)
    ax.set_axis_off()
    ax.set_title(title or neg.name, fontsize=10)


def render_figure(neg: Negotiation, path: str | Path, witness: object = None, title: str | None = None) -> Path:
    """Writes a lane diagram; the format follows the file suffix (png, svg, pdf)."""
    path = Path(path)
    if path.suffix.lower() not in (".png", ".svg", ".pdf"):
        raise PreconditionError(f"unsupported figure format {path.suffix or '(none)'}")
    width = max(3.0, 1.0 + len(neg.processes) * LANE_GAP * 0.9)
    height = max(2.5, 1.2 + (max(layers(neg).values()) + 1) * 0.55)
    fig, ax = plt.subplots(figsize=(width, height))
    try:
        draw(neg, ax, witness, title)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
    finally:
        plt.close(fig)
    return path
