"""Report figures: ROC overlays, score distributions, condition-wise bars.

Rendering uses the Agg backend so the evaluation path works headless; every
function writes a PNG and returns the path it wrote.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport, RocCurve


def plot_roc_curves(curves: dict[str, RocCurve], path: str | Path) -> Path:
    """Overlay the ROC step curves of all methods on one axis."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for method, curve in sorted(curves.items()):
        ax.step(curve.fpr, curve.tpr, where="post", label=f"{method} (AUROC {curve.auroc:.4f})")
    ax.plot([0, 1], [0, 1], linestyle=":", color="grey", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_score_distribution(
    edges: np.ndarray,
    id_counts: np.ndarray,
    ood_counts: np.ndarray,
    method: str,
    path: str | Path,
) -> Path:
    """ID vs OOD score histograms for one method, density-normalized."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = np.diff(edges)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for counts, label, color in (
        (id_counts, "ID", "tab:blue"),
        (ood_counts, "OOD", "tab:red"),
    ):
        total = counts.sum()
        density = counts / (total * width) if total else counts
        ax.bar(centers, density, width=width, alpha=0.5, label=label, color=color)
    ax.set_xlabel(f"{method} score (higher = more OOD)")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_condition_bars(report: EvalReport, path: str | Path) -> Path:
    """Grouped AUROC bars, one group per condition tag, one bar per method."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    conditions = []
    methods = []
    for row in report.rows:
        if row.condition is not None and row.condition not in conditions:
            conditions.append(row.condition)
        if row.method not in methods:
            methods.append(row.method)
    values = {
        (r.method, r.condition): r.auroc
        for r in report.rows
        if r.condition is not None
    }
    fig, ax = plt.subplots(figsize=(max(5.0, 1.4 * max(len(conditions), 1)), 3.6))
    x = np.arange(len(conditions), dtype=float)
    width = 0.8 / max(len(methods), 1)
    for j, method in enumerate(methods):
        heights = [values.get((method, c)) or 0.0 for c in conditions]
        ax.bar(x + (j - (len(methods) - 1) / 2) * width, heights, width=width, label=method)
    ax.set_xticks(x)
    ax.set_xticklabels(conditions, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("AUROC")
    ax.set_ylim(0, 1.05)
    ax.axhline(0.5, linestyle=":", color="grey", linewidth=0.8)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
