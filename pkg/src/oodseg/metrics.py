"""Pixel pooling and exact ranking metrics: AUROC, ROC curves, FPR@TPR.

AUROC is the Mann-Whitney statistic P(ood > id) + 0.5 * P(ood == id),
computed exactly via average ranks over a single sort. ROC curves are the
exact step curves over all distinct score thresholds (descending); their
trapezoidal area equals the rank AUROC. FPR@TPR takes the minimum FPR over
operating points reaching the target TPR, with no interpolation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DataError,
    EmptyPoolError,
    ManifestError,
    OrientationError,
    ShapeMismatchError,
)
from .scoremaps import HIGHER_OOD, ScoreMap
from .tensor_store import RoleMask

HISTOGRAM_BINS = 100
BINNED_MODE_BINS = 1 << 16


@dataclass
class ScorePool:
    """Flattened ID-pixel and OOD-pixel scores feeding all metrics."""

    id_scores: np.ndarray
    ood_scores: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.id_scores = np.asarray(self.id_scores, dtype=np.float64).ravel()
        self.ood_scores = np.asarray(self.ood_scores, dtype=np.float64).ravel()
        for name, arr in (("id", self.id_scores), ("ood", self.ood_scores)):
            if arr.size and not np.isfinite(arr).all():
                raise DataError(f"{name} scores contain non-finite values")


@dataclass
class RocCurve:
    """Exact ROC step curve; thresholds strictly decreasing from +inf."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auroc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return [
            (float(f), float(t), float(th))
            for f, t, th in zip(self.fpr, self.tpr, self.thresholds)
        ]


@dataclass
class ReportRow:
    method: str
    condition: str | None
    num_id: int
    num_ood: int
    auroc: float | None = None
    id_mean: float | None = None
    ood_mean: float | None = None
    fpr95: float | None = None
    fpr98: float | None = None
    approximate: bool = False


@dataclass
class EvalReport:
    rows: list[ReportRow]
    meta: dict = field(default_factory=dict)


def pool_scores(
    score_maps: Sequence[ScoreMap],
    roles: Sequence[RoleMask],
    conditions: Sequence[str] | None = None,
    condition_filter: str | None = None,
    method_name: str = "",
) -> ScorePool:
    """Pool pixel scores by role across samples; IGNORE pixels are dropped.

    All maps must be oriented higher-means-OOD. condition_filter restricts
    pooling to samples carrying that tag (requires per-sample conditions).
    """
    if len(score_maps) != len(roles):
        raise ValueError("score_maps and roles must have equal length")
    if condition_filter is not None and conditions is None:
        raise ValueError("condition_filter requires per-sample conditions")
    id_parts: list[np.ndarray] = []
    ood_parts: list[np.ndarray] = []
    for i, (smap, role) in enumerate(zip(score_maps, roles)):
        if condition_filter is not None and conditions[i] != condition_filter:
            continue
        if smap.orientation != HIGHER_OOD:
            raise OrientationError(
                f"pooling expects higher-means-OOD maps, sample {i} is {smap.orientation!r}"
            )
        if smap.shape != role.codes.shape:
            raise ShapeMismatchError(
                f"sample {i}: score map {smap.shape} vs role mask {role.codes.shape}"
            )
        usable = smap.valid_mask()
        values = smap.values
        id_parts.append(values[role.id_mask & usable])
        ood_parts.append(values[role.ood_mask & usable])
    id_scores = np.concatenate(id_parts) if id_parts else np.empty(0)
    ood_scores = np.concatenate(ood_parts) if ood_parts else np.empty(0)
    if id_scores.size == 0 and ood_scores.size == 0:
        raise EmptyPoolError(
            f"no scoreable pixels pooled (condition_filter={condition_filter!r})"
        )
    return ScorePool(
        id_scores=id_scores,
        ood_scores=ood_scores,
        meta={"method_name": method_name, "condition_filter": condition_filter},
    )


def _require_both_sides(pool: ScorePool) -> None:
    if pool.id_scores.size == 0:
        raise EmptyPoolError("pool has no ID pixels")
    if pool.ood_scores.size == 0:
        raise EmptyPoolError("pool has no OOD pixels")


def auroc(pool: ScorePool) -> float:
    """P(ood > id) + 0.5 * P(ood == id), exact via average ranks."""
    _require_both_sides(pool)
    n_id, n_ood = pool.id_scores.size, pool.ood_scores.size
    ranks = rankdata(np.concatenate([pool.id_scores, pool.ood_scores]))
    u = ranks[n_id:].sum() - n_ood * (n_ood + 1) / 2.0
    return float(u / (n_id * n_ood))


def roc_curve(pool: ScorePool) -> RocCurve:
    """Exact step ROC over all distinct thresholds, descending.

    Starts at (0, 0) with threshold +inf and ends at (1, 1) at the minimum
    observed score; trapezoidal area equals auroc(pool) to 1e-9.
    """
    _require_both_sides(pool)
    n_id, n_ood = pool.id_scores.size, pool.ood_scores.size
    scores = np.concatenate([pool.id_scores, pool.ood_scores])
    is_ood = np.concatenate([np.zeros(n_id), np.ones(n_ood)])
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    is_ood = is_ood[order]
    # Last index of each run of equal scores = the operating point at that threshold.
    boundary = np.nonzero(np.diff(scores))[0]
    last = np.concatenate([boundary, [scores.size - 1]])
    tp = np.cumsum(is_ood)[last]
    fp = (last + 1) - tp
    thresholds = np.concatenate([[np.inf], scores[last]])
    tpr = np.concatenate([[0.0], tp / n_ood])
    fpr = np.concatenate([[0.0], fp / n_id])
    area = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auroc=area)


def fpr_at_tpr(curve: RocCurve, target: float) -> float:
    """Minimum FPR among operating points with TPR >= target (no interpolation)."""
    if not 0 < target <= 1:
        raise ValueError(f"target TPR must lie in (0, 1], got {target}")
    idx = int(np.searchsorted(curve.tpr, target, side="left"))
    return float(curve.fpr[idx])


def mean_scores(pool: ScorePool) -> tuple[float, float]:
    """(id_mean, ood_mean) as float64 arithmetic means."""
    _require_both_sides(pool)
    return float(pool.id_scores.mean()), float(pool.ood_scores.mean())


def evaluate_pool(pool: ScorePool) -> dict:
    """AUROC, ID/OOD means, FPR95 and FPR98 for one pool; None-valued when a
    side is empty (e.g. a condition without OOD pixels)."""
    out = {
        "num_id": int(pool.id_scores.size),
        "num_ood": int(pool.ood_scores.size),
        "auroc": None,
        "id_mean": None,
        "ood_mean": None,
        "fpr95": None,
        "fpr98": None,
    }
    if pool.id_scores.size:
        out["id_mean"] = float(pool.id_scores.mean())
    if pool.ood_scores.size:
        out["ood_mean"] = float(pool.ood_scores.mean())
    if pool.id_scores.size and pool.ood_scores.size:
        curve = roc_curve(pool)
        out["auroc"] = auroc(pool)
        out["fpr95"] = fpr_at_tpr(curve, 0.95)
        out["fpr98"] = fpr_at_tpr(curve, 0.98)
    return out


def condition_report(
    score_maps_by_method: dict[str, Sequence[ScoreMap]],
    roles: Sequence[RoleMask],
    sample_conditions: Sequence[str],
    condition_tags: Sequence[str] | None = None,
    meta: dict | None = None,
) -> EvalReport:
    """One row per method (global) plus one sub-row per (method, condition).

    Conditions with no OOD pixels produce rows with null metrics rather
    than failing the whole report.
    """
    available = set(sample_conditions)
    for tag in condition_tags or ():
        if tag not in available:
            raise ManifestError(f"condition tag {tag!r} does not appear in the manifest")
    rows: list[ReportRow] = []
    for method, maps in score_maps_by_method.items():
        for condition in [None, *list(condition_tags or ())]:
            try:
                pool = pool_scores(
                    maps,
                    roles,
                    conditions=sample_conditions,
                    condition_filter=condition,
                    method_name=method,
                )
                stats = evaluate_pool(pool)
            except EmptyPoolError:
                stats = {
                    "num_id": 0,
                    "num_ood": 0,
                    "auroc": None,
                    "id_mean": None,
                    "ood_mean": None,
                    "fpr95": None,
                    "fpr98": None,
                }
            rows.append(ReportRow(method=method, condition=condition, **stats))
    return EvalReport(rows=rows, meta=dict(meta or {}))


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def format_report_table(report: EvalReport) -> str:
    """Human-readable table; 4 decimal places per metric."""
    header = ("method", "condition", "auroc", "id_mean", "ood_mean", "fpr95", "fpr98", "pixels(id/ood)")
    rows = [header]
    for r in report.rows:
        rows.append(
            (
                r.method + (" ~" if r.approximate else ""),
                r.condition or "(global)",
                _fmt(r.auroc),
                _fmt(r.id_mean),
                _fmt(r.ood_mean),
                _fmt(r.fpr95),
                _fmt(r.fpr98),
                f"{r.num_id}/{r.num_ood}",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    if any(r.approximate for r in report.rows):
        lines.append("~ approximate: metrics computed from fixed-bin histograms")
    return "\n".join(lines)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "meta": report.meta,
        "rows": [
            {
                "method": r.method,
                "condition": r.condition,
                "num_id": r.num_id,
                "num_ood": r.num_ood,
                "auroc": r.auroc,
                "id_mean": r.id_mean,
                "ood_mean": r.ood_mean,
                "fpr95": r.fpr95,
                "fpr98": r.fpr98,
                "approximate": r.approximate,
            }
            for r in report.rows
        ],
    }


def score_histogram(
    pool: ScorePool, bins: int = HISTOGRAM_BINS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(edges, id_counts, ood_counts) over the pooled score range."""
    both = np.concatenate([pool.id_scores, pool.ood_scores])
    lo, hi = float(both.min()), float(both.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    id_counts, _ = np.histogram(pool.id_scores, bins=edges)
    ood_counts, _ = np.histogram(pool.ood_scores, bins=edges)
    return edges, id_counts, ood_counts


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["threshold", "fpr", "tpr"])
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
            writer.writerow([repr(float(th)), repr(float(f)), repr(float(t))])


def write_histogram_csv(
    edges: np.ndarray, id_counts: np.ndarray, ood_counts: np.ndarray, path: str | Path
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["bin_left", "bin_right", "id_count", "ood_count"])
        for i in range(len(id_counts)):
            writer.writerow(
                [repr(float(edges[i])), repr(float(edges[i + 1])), int(id_counts[i]), int(ood_counts[i])]
            )


# ---------------------------------------------------------------------------
# Approximate fixed-bin mode for memory-constrained runs. Scores are counted
# into 2^16 bins over the observed range; metrics treat every score in a bin
# as tied at the bin center, and reports flag the rows as approximate.


@dataclass
class BinnedScorePool:
    edges: np.ndarray
    id_counts: np.ndarray
    ood_counts: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def make_bin_edges(lo: float, hi: float, bins: int = BINNED_MODE_BINS) -> np.ndarray:
    if not np.isfinite([lo, hi]).all():
        raise DataError("binned mode needs a finite score range")
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def bin_counts(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=edges)
    return counts


def auroc_binned(pool: BinnedScorePool) -> float:
    """Rank AUROC from grouped counts (all scores in a bin count as tied)."""
    n_id = int(pool.id_counts.sum())
    n_ood = int(pool.ood_counts.sum())
    if n_id == 0:
        raise EmptyPoolError("binned pool has no ID pixels")
    if n_ood == 0:
        raise EmptyPoolError("binned pool has no OOD pixels")
    id_f = pool.id_counts.astype(np.float64)
    ood_f = pool.ood_counts.astype(np.float64)
    id_below = np.concatenate([[0.0], np.cumsum(id_f)[:-1]])
    u = float((ood_f * (id_below + 0.5 * id_f)).sum())
    return u / (n_id * n_ood)


def roc_curve_binned(pool: BinnedScorePool) -> RocCurve:
    """Step ROC over occupied bin centers, descending; consistent with
    auroc_binned's tie handling."""
    n_id = int(pool.id_counts.sum())
    n_ood = int(pool.ood_counts.sum())
    if n_id == 0 or n_ood == 0:
        raise EmptyPoolError("binned pool needs pixels on both sides")
    occupied = (pool.id_counts + pool.ood_counts) > 0
    centers = pool.centers[occupied][::-1]
    tp = np.cumsum(pool.ood_counts[occupied][::-1])
    fp = np.cumsum(pool.id_counts[occupied][::-1])
    thresholds = np.concatenate([[np.inf], centers])
    tpr = np.concatenate([[0.0], tp / n_ood])
    fpr = np.concatenate([[0.0], fp / n_id])
    area = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auroc=area)


def evaluate_binned_pool(pool: BinnedScorePool, id_mean: float | None, ood_mean: float | None) -> dict:
    """Approximate metrics from grouped counts; means are supplied by the
    caller from exact streaming sums."""
    out = {
        "num_id": int(pool.id_counts.sum()),
        "num_ood": int(pool.ood_counts.sum()),
        "auroc": None,
        "id_mean": id_mean,
        "ood_mean": ood_mean,
        "fpr95": None,
        "fpr98": None,
    }
    if out["num_id"] and out["num_ood"]:
        curve = roc_curve_binned(pool)
        out["auroc"] = auroc_binned(pool)
        out["fpr95"] = fpr_at_tpr(curve, 0.95)
        out["fpr98"] = fpr_at_tpr(curve, 0.98)
    return out
