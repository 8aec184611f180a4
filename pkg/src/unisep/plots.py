"""Static report figures rendered next to the delimited output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import EvalReport


def confusion_heatmap(report: EvalReport, path: str) -> str:
    percent = report.confusion_percent()
    counts = report.confusion
    n_max = counts.shape[0]
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    image = ax.imshow(percent, cmap="Blues", vmin=0.0, vmax=100.0)
    ax.set_xticks(range(n_max + 1), [str(j) for j in range(n_max + 1)])
    ax.set_yticks(range(n_max), [str(i + 1) for i in range(n_max)])
    ax.set_xlabel("estimated speakers")
    ax.set_ylabel("true speakers")
    ax.set_title("speaker counting rate [%]")
    for i in range(n_max):
        for j in range(n_max + 1):
            if counts[i, j] or counts[i].sum():
                color = "white" if percent[i, j] > 50 else "black"
                ax.text(j, i, f"{percent[i, j]:.0f}", ha="center", va="center", color=color)
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def metric_bars(report: EvalReport, path: str, metric: str = "si_snri") -> str:
    keys = sorted(report.aggregates, key=lambda k: report.aggregates[k]["n_speakers"])
    labels = [f"{report.aggregates[k]['n_speakers']}mix" for k in keys]
    values = [report.aggregates[k][metric] for k in keys]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.bar(np.arange(len(values)), values, color="#4878d0")
    ax.set_xticks(np.arange(len(values)), labels)
    ax.set_ylabel(f"{metric} [dB]")
    ax.set_title(f"{report.task.upper()} {metric} by speaker count")
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report_figures(report: EvalReport, out_dir: str) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    return {
        "confusion": confusion_heatmap(report, os.path.join(out_dir, "confusion_matrix.png")),
        "metrics": metric_bars(report, os.path.join(out_dir, "metrics_by_n.png")),
    }
