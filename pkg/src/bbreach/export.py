"""Flowpipe CSV, verdict summary and SVG projection writers."""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from typing import Sequence

from .interval import Interval, IntervalBox
from .reach import FlowPipe, PartitionResult, Verdict
from .system import SystemSpec


def flowpipe_rows(pipe: FlowPipe):
    for t, boxes in enumerate(pipe.steps):
        for i, b in enumerate(boxes):
            yield t, "step", i, b
        if t < len(pipe.tubes):
            for i, b in enumerate(pipe.tubes[t]):
                yield t, "tube", i, b


def flowpipe_csv(pipe: FlowPipe) -> str:
    """``step,kind,box_index,l1,u1,...,ln,un`` with round-trip float text."""
    n = pipe.steps[0][0].dim
    header = ["step", "kind", "box_index"] + [f"{c}{i + 1}" for i in range(n) for c in "lu"]
    lines = [",".join(header)]
    for t, kind, i, b in flowpipe_rows(pipe):
        lines.append(f"{t},{kind},{i}," + ",".join(repr(v) for v in b.flat()))
    return "\n".join(lines) + "\n"


def read_flowpipe_csv(text: str) -> dict[str, dict[int, list[IntervalBox]]]:
    """Inverse of :func:`flowpipe_csv`: ``{kind: {step: [boxes]}}``."""
    out: dict[str, dict[int, list[IntervalBox]]] = {"step": {}, "tube": {}}
    for row in csv.DictReader(io.StringIO(text)):
        vals = [float(v) for k, v in row.items() if k not in ("step", "kind", "box_index")]
        out[row["kind"]].setdefault(int(row["step"]), []).append(IntervalBox.from_flat(vals))
    return out


def verdict_dict(v: Verdict) -> dict:
    return {
        "verdict": v.kind.value,
        "goal_step": v.goal_step,
        "unsafe_step": v.unsafe_step,
        "unsafe_box": list(v.unsafe_box.flat()) if v.unsafe_box is not None else None,
        "reason": v.reason or None,
    }


def summary(results: Sequence[PartitionResult], combined: Verdict, *, aggregation: bool = True,
            wall_time_ms: float | None = None) -> dict:
    """Verdict summary document for a (possibly partitioned) verification run."""
    pipes = [r.pipe for r in results if r.pipe is not None]
    depth = max((len(p.steps) for p in pipes), default=0)
    per_step = [sum(len(p.steps[t]) for p in pipes if t < len(p.steps)) for t in range(depth)]
    pre = [sum(p.pre_aggregation[t] for p in pipes if t < len(p.pre_aggregation)) for t in range(depth)]
    if wall_time_ms is None:
        wall_time_ms = sum(p.wall_time_ms for p in pipes)
    doc = verdict_dict(combined)
    doc.update({
        "boxes_per_step": per_step,
        "successors_per_step": pre,
        "wall_time_ms": round(wall_time_ms, 3),
        "aggregation": aggregation,
        "domain_warnings": sum(p.domain_warnings for p in pipes),
        "partitions": [
            dict(verdict_dict(r.verdict), index=r.index, region=list(r.region.flat()),
                 boxes_per_step=r.pipe.boxes_per_step() if r.pipe else [])
            for r in results
        ],
    })
    return doc


def dumps_summary(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


# --- SVG ----------------------------------------------------------------------

GOAL_COLOR = "#1f4fd8"     # blue
UNSAFE_COLOR = "#7b2d9b"   # purple
BOX_COLOR = "#d62728"      # red
TUBE_COLOR = "#f4a3a3"


def _finite_clip(lo: float, hi: float, view: tuple[float, float]) -> tuple[float, float]:
    return max(lo, view[0]), min(hi, view[1])


def _time_span(t: int, kind: str) -> Interval:
    # horizontal extent of a box when a 1-D system is drawn against time
    return Interval(t - 1.0, float(t)) if kind == "tube" else Interval(t - 0.15, t + 0.15)


def svg_projection(pipes: Sequence[FlowPipe], spec: SystemSpec, proj: tuple[int, int] = (0, 1),
                   size: int = 600) -> str:
    """x-y projection: one ``<rect class="box">`` per CSV row, plus goal and unsafe regions.

    With ``proj = (i, i)`` the horizontal axis is the step index instead.
    """
    i, j = proj
    rows = [(t, kind, b) for p in pipes for t, kind, _, b in flowpipe_rows(p)]
    timeline = i == j
    boxes = [(kind, _time_span(t, kind) if timeline else b[i], b) for t, kind, b in rows]
    xs = [v for _, x, _ in boxes for v in (x.lo, x.hi)]
    ys = [v for _, _, b in boxes for v in (b[j].lo, b[j].hi)]
    for region in (spec.goal, *spec.unsafe):
        pairs = ((region[j], ys),) if timeline else ((region[i], xs), (region[j], ys))
        for v, store in pairs:
            if abs(v.lo) < 1e100 and abs(v.hi) < 1e100:
                store.extend((v.lo, v.hi))
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    pad_x, pad_y = 0.05 * (xmax - xmin or 1), 0.05 * (ymax - ymin or 1)
    view_x, view_y = (xmin - pad_x, xmax + pad_x), (ymin - pad_y, ymax + pad_y)
    sx = size / (view_x[1] - view_x[0])
    sy = size / (view_y[1] - view_y[0])

    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(size), height=str(size),
                      viewBox=f"0 0 {size} {size}")
    xlabel = "step" if timeline else f"x{i + 1}"
    ET.SubElement(root, "title").text = f"{spec.name}: {xlabel}-x{j + 1} projection"

    def rect(b_i, b_j, cls, fill, stroke, opacity):
        x0, x1 = _finite_clip(b_i.lo, b_i.hi, view_x)
        y0, y1 = _finite_clip(b_j.lo, b_j.hi, view_y)
        ET.SubElement(root, "rect", {
            "class": cls,
            "x": f"{(x0 - view_x[0]) * sx:.3f}",
            "y": f"{(view_y[1] - y1) * sy:.3f}",
            "width": f"{max(x1 - x0, 0) * sx:.3f}",
            "height": f"{max(y1 - y0, 0) * sy:.3f}",
            "fill": fill, "fill-opacity": str(opacity), "stroke": stroke, "stroke-width": "0.5",
        })

    def region_x(r):
        return Interval(*view_x) if timeline else r[i]

    rect(region_x(spec.goal), spec.goal[j], "goal", GOAL_COLOR, GOAL_COLOR, 0.25)
    for u in spec.unsafe:
        rect(region_x(u), u[j], "unsafe", UNSAFE_COLOR, UNSAFE_COLOR, 0.35)
    for kind, x, b in boxes:
        if kind == "tube":
            rect(x, b[j], "box tube", TUBE_COLOR, "none", 0.3)
    for kind, x, b in boxes:
        if kind == "step":
            rect(x, b[j], "box step", "none", BOX_COLOR, 1)
    return ET.tostring(root, encoding="unicode") + "\n"
