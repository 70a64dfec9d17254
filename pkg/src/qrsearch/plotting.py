"""Optional PNG figures for CLI outputs (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_points(points: np.ndarray, path, title: str = "", axes=(0, 1)) -> Path:
    """Scatter of a 2-D projection (1-D sets are drawn against their index)."""
    pts = np.atleast_2d(points)
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    if pts.shape[0] and pts.shape[1] >= 2:
        ax.scatter(pts[:, axes[0]], pts[:, axes[1]], s=8)
        ax.set_xlabel(f"x{axes[0] + 1}")
        ax.set_ylabel(f"x{axes[1] + 1}")
        ax.set_ylim(0, 1)
    elif pts.shape[0]:
        ax.scatter(pts[:, 0], np.arange(len(pts)), s=8)
        ax.set_xlabel("x1")
        ax.set_ylabel("index")
    ax.set_xlim(0, 1)
    ax.set_title(title)
    return _save(fig, Path(path))


def plot_bench(report, directory) -> list[Path]:
    """Mean best loss against budget (and its moving average), one figure per objective/dim."""
    out = []
    groups: dict[tuple, list[dict]] = {}
    for row in report.moving_averages:
        groups.setdefault((row["objective"], row["dimension"]), []).append(row)
    budgets = sorted(report.config["budgets"])
    for (obj, d), rows in groups.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        for row in rows:
            line, = ax.plot(budgets, row["mean_loss"], marker="o", ms=3, lw=1,
                            label=row["sampler"])
            if row["moving_average"]:
                ax.plot(row["budgets"], row["moving_average"], color=line.get_color(),
                        lw=2, alpha=0.5)
        ax.set_xlabel("budget")
        ax.set_ylabel("mean best loss")
        ax.set_title(f"{obj}, d={d}")
        ax.legend(fontsize=7)
        out.append(_save(fig, Path(directory) / f"bench_{obj.replace(':', '_')}_d{d}.png"))
    return out


def plot_ratios(table, directory) -> list[Path]:
    """Grouped bars of loss ratios to lds-init, one figure per batch count."""
    out = []
    f = table.functions
    others = [s for s in table.strategies if s != "lds"]
    width = 0.8 / max(len(others), 1)
    for t in table.batch_counts:
        fig, ax = plt.subplots(figsize=(7, 3.8))
        x = np.arange(len(f))
        for i, s in enumerate(others):
            ax.bar(x + i * width, [table.ratio[t][s][name] for name in f], width, label=s)
        ax.axhline(1.0, color="k", lw=0.8)
        ax.set_xticks(x + width * (len(others) - 1) / 2, f, rotation=30)
        ax.set_ylabel("loss / lds loss")
        ax.set_title(f"{t} batch(es)")
        if others:
            ax.legend(fontsize=7)
        out.append(_save(fig, Path(directory) / f"bo_ratios_T{t}.png"))
    return out
