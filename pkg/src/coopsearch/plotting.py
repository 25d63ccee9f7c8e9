"""Figure rendering for run and comparison reports."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fleet import AgentKind  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def new_figure(width: float = 5.0, height: float | None = None, **kwargs):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    with plt.rc_context(STYLE):
        return plt.subplots(figsize=(width, height or width * golden), **kwargs)


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_paths(grid, paths, specs, path):
    fig, ax = new_figure(5.0, 5.0)
    extent = (0, grid.width * grid.cell_size, 0, grid.height * grid.cell_size)
    poc = np.ma.masked_where(~grid.valid, grid.poc)
    im = ax.imshow(poc, origin="lower", extent=extent, cmap="Greys", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.8, label="POC")
    for spec, p in zip(specs, paths):
        xy = np.array([((c.col + 0.5) * grid.cell_size, (c.row + 0.5) * grid.cell_size) for c in p.cells])
        if spec.kind is AgentKind.STATIC_EE:
            ax.plot(*xy[0], marker="*", ms=12, color="k", label=f"S-EE {spec.id}")
            continue
        style = "--" if spec.kind is AgentKind.MOBILE_EE else "-"
        line, = ax.plot(xy[:, 0], xy[:, 1], style, lw=1.2, label=f"{spec.kind.value} {spec.id}")
        ax.plot(*xy[0], "o", color=line.get_color(), ms=4)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper right", framealpha=0.8)
    return save(fig, path)


def plot_knowledge(report, agent_ids, path):
    fig, ax = new_figure()
    steps = np.arange(report.EAK_series.shape[0])
    for i, aid in enumerate(agent_ids):
        ax.plot(steps, report.EAK_series[:, i], lw=1.0, label=f"EAK agent {aid}")
    ax.plot(steps, report.EIK_series, "k--", lw=1.2, label="intersected")
    ax.set_xlabel("step")
    ax.set_ylabel("accumulated knowledge")
    ax.legend()
    return save(fig, path)


def plot_comparison(stats, out_dir) -> list[Path]:
    """One bar chart per metric; whiskers span the trial min/max."""
    by_metric = defaultdict(list)
    for s in stats:
        by_metric[s["metric"]].append(s)
    written = []
    for metric, rows in by_metric.items():
        fig, ax = new_figure(4.5)
        x = np.arange(len(rows))
        mean = np.array([r["mean"] for r in rows])
        err = np.array([[r["mean"] - r["min"] for r in rows], [r["max"] - r["mean"] for r in rows]])
        ax.bar(x, mean, yerr=err, capsize=3, color="0.6", edgecolor="k", lw=0.6)
        ax.set_xticks(x, [f"{r['use_case']}\n{r['run']}" for r in rows], rotation=0)
        ax.set_ylabel(metric)
        written.append(save(fig, Path(out_dir) / f"{metric}.png"))
    return written
