"""Figure rendering for the report-producing CLI paths.

All figures go straight to files through the Agg backend; nothing here
opens a window.  Styling is kept to a small shared rc so the PNGs that land
next to the JSON/CSV reports look consistent.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_RC = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(Path(path), format="png")
    plt.close(fig)


def save_gamma_curve(
    gammas: Sequence[float],
    mean_auc: Sequence[float],
    per_seed: Sequence[Sequence[float]],
    path: str | Path,
) -> None:
    """Test AUC against the augmentation ratio, one faint line per seed."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for row in per_seed:
            ax.plot(gammas, row, color="tab:gray", alpha=0.35, linewidth=0.8)
        ax.plot(gammas, mean_auc, color="tab:blue", marker="o", label="mean over seeds")
        ax.set_xlabel("augmentation ratio γ")
        ax.set_ylabel("test AUC")
        ax.legend(loc="lower right")
        _save(fig, path)


def save_class_bars(
    class_names: Sequence[str],
    values: Sequence[float | None],
    ylabel: str,
    path: str | Path,
) -> None:
    """Per-class bar chart; classes with undefined values are drawn at zero."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        heights = [0.0 if v is None else v for v in values]
        colors = ["tab:gray" if v is None else "tab:blue" for v in values]
        ax.bar(range(len(class_names)), heights, color=colors)
        ax.set_xticks(range(len(class_names)))
        ax.set_xticklabels(class_names, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel(ylabel)
        ax.set_ylim(0.0, 1.05)
        _save(fig, path)


def save_similarity_bars(
    means: dict[str, tuple[float, float]],
    path: str | Path,
) -> None:
    """Mean +/- std bars for each distance measure, one subplot per measure."""
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(means))
        if len(means) == 1:
            axes = [axes]
        for ax, (name, (mean, std)) in zip(axes, means.items()):
            ax.bar([0], [mean], yerr=[std], color="tab:blue", capsize=4, width=0.5)
            ax.set_xticks([0])
            ax.set_xticklabels([name])
            ax.set_ylabel("distance")
        _save(fig, path)
