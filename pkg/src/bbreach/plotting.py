"""Matplotlib report figures written next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .export import BOX_COLOR, GOAL_COLOR, TUBE_COLOR, UNSAFE_COLOR  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.linewidth": 0.8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
})


def _bounded(iv) -> bool:
    return abs(iv.lo) < 1e100 and abs(iv.hi) < 1e100


def _region_patch(region, i, j, color, label, ax, timeline=False):
    xi, yj = region[i], region[j]
    x0, x1 = (xi.lo, xi.hi) if _bounded(xi) and not timeline else ax.get_xlim()
    y0, y1 = (yj.lo, yj.hi) if _bounded(yj) else ax.get_ylim()
    ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, facecolor=color, alpha=0.25,
                           edgecolor=color, lw=1.0, label=label, zorder=0.5))


def plot_flowpipe(pipes, spec, path, proj=(0, 1), trajectories=None, tubes=True):
    """Boxes of every step (red), tube enclosures, goal (blue), unsafe (purple).

    ``proj = (i, i)`` draws dimension ``i`` against the step index.
    """
    i, j = proj
    timeline = i == j
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    steps, tube_boxes = [], []
    for p in pipes:
        for t, boxes in enumerate(p.steps):
            steps.extend((t, b) for b in boxes)
        for t, boxes in enumerate(p.tubes):
            tube_boxes.extend((t, b) for b in boxes)

    def rect(t, b, tube):
        if timeline:
            x0, w = (t - 1.0, 1.0) if tube else (t - 0.15, 0.3)
        else:
            x0, w = b[i].lo, b[i].width
        return Rectangle((x0, b[j].lo), w, b[j].width)

    if tubes and tube_boxes:
        ax.add_collection(PatchCollection([rect(t, b, True) for t, b in tube_boxes],
                                          facecolor=TUBE_COLOR, edgecolor="none", alpha=0.35))
    ax.add_collection(PatchCollection([rect(t, b, False) for t, b in steps],
                                      facecolor="none", edgecolor=BOX_COLOR, lw=0.6))
    if trajectories is not None:
        for k in range(trajectories.shape[1]):
            xs = range(trajectories.shape[0]) if timeline else trajectories[:, k, i]
            ax.plot(xs, trajectories[:, k, j], color="0.3", lw=0.4, alpha=0.6)
    ax.autoscale_view()
    _region_patch(spec.goal, i, j, GOAL_COLOR, "goal", ax, timeline)
    for n, u in enumerate(spec.unsafe):
        _region_patch(u, i, j, UNSAFE_COLOR, "unsafe" if n == 0 else None, ax, timeline)
    ax.autoscale_view()
    ax.set_xlabel("step" if timeline else f"$x_{i + 1}$")
    ax.set_ylabel(f"$x_{j + 1}$")
    ax.set_title(spec.name)
    ax.legend(loc="best", frameon=False, fontsize=7)
    fig.savefig(path)
    plt.close(fig)


def plot_box_counts(counts: dict[str, list[int]], path, log_scale=True):
    """Boxes per step for several runs (e.g. with and without aggregation)."""
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    for label, ys in counts.items():
        ax.plot(range(len(ys)), ys, marker="o", ms=2.5, lw=1.0, label=label)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("interval boxes")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)


def plot_rewards(history: list[dict], path):
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    its = [h["iteration"] for h in history]
    for key, style in (("mean_reward", "-"), ("elite_mean", "--"), ("best_reward", ":")):
        ax.plot(its, [h[key] for h in history], style, lw=1.0, label=key.replace("_", " "))
    ax.set_xlabel("iteration")
    ax.set_ylabel("reward")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)


def plot_trajectories(states, spec, path, proj=(0, 1)):
    i, j = proj
    timeline = i == j
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    for k in range(states.shape[1]):
        xs = range(states.shape[0]) if timeline else states[:, k, i]
        ax.plot(xs, states[:, k, j], lw=0.5, color="0.25", alpha=0.7)
    ax.autoscale_view()
    _region_patch(spec.goal, i, j, GOAL_COLOR, "goal", ax, timeline)
    for n, u in enumerate(spec.unsafe):
        _region_patch(u, i, j, UNSAFE_COLOR, "unsafe" if n == 0 else None, ax, timeline)
    ax.set_xlabel("step" if timeline else f"$x_{i + 1}$")
    ax.set_ylabel(f"$x_{j + 1}$")
    ax.legend(frameon=False, fontsize=7)
    fig.savefig(path)
    plt.close(fig)
