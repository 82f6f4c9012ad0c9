"""Figure rendering for evaluation reports and sweep tables.

Every report written by the CLI gets a PNG next to its delimited output.
Rendering is headless (Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EvalReport  # noqa: E402

_METRIC_LABELS = {"accuracy": "Accuracy (%)", "micro_f1": "Micro-F1 (%)"}


def render_eval_figure(report: EvalReport, path: str | Path) -> None:
    """Score vs. training ratio with one standard deviation as error bars."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    x = [100 * r for r in report.ratios]
    ax.errorbar(x, [100 * m for m in report.means], yerr=[100 * s for s in report.stds],
                marker="o", capsize=3, linewidth=1.4)
    ax.set_xlabel("% of training data")
    ax.set_ylabel(_METRIC_LABELS.get(report.metric, report.metric))
    ax.set_title(f"{report.metric} over {report.repetitions} splits")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(rows: list[dict], parameter: str, path: str | Path) -> None:
    """One line per training ratio across the swept values."""
    by_ratio: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        by_ratio.setdefault(row["ratio"], []).append((row["value"], row["mean"]))
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for ratio in sorted(by_ratio):
        pts = sorted(by_ratio[ratio])
        ax.plot([p[0] for p in pts], [100 * p[1] for p in pts],
                marker="o", linewidth=1.4, label=f"{100 * ratio:.0f}%")
    values = sorted({row["value"] for row in rows})
    if parameter in ("c", "shift") and all(v > 0 for v in values):
        ax.set_xscale("log")
    ax.set_xlabel(parameter)
    ax.set_ylabel("Score (%)")
    ax.grid(alpha=0.3)
    ax.legend(title="train ratio", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_training_figure(history: list[dict], path: str | Path) -> None:
    """Mean squared residual over positive entries per epoch."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot([h["epoch"] for h in history], [h["positive_mse"] for h in history],
            marker="o", linewidth=1.4)
    ax.set_xlabel("epoch")
    ax.set_ylabel("positive-entry MSE")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
