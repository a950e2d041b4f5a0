"""Validation-fitted standardization and the fused hybrid score.

Raw geometric and energy scores live on different scales, so both are
z-scored with mean/std fitted on ID pixels of the pure-ID validation split.
The fused ID-oriented score is alpha * Z_geom + (1 - alpha) * Z_energy; its
negation is emitted so that larger values mean stronger OOD evidence. The
single-score baselines are negated standardized maps under the same sign
convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateScoreError, EmptyPoolError, OrientationError, ShapeMismatchError
from .geometry import GeometryStats, neco_map
from .logit_scores import EnergyConfig, energy_map
from .scoremaps import HIGHER_ID, HIGHER_OOD, ScoreMap
from .tensor_store import DatasetManifest, load_sample, remap_labels

STD_FLOOR = 1e-8
DEFAULT_ALPHA = 0.6


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class NormalizerStats:
    """Validation-fitted mean/std pairs for the raw geometric and energy scores."""

    neco_mean: float
    neco_std: float
    energy_mean: float
    energy_std: float
    fit_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("neco_std", "energy_std"):
            if getattr(self, name) < STD_FLOOR:
                raise DegenerateScoreError(
                    f"{name} = {getattr(self, name):g} below floor {STD_FLOOR:g}; "
                    "score distribution is degenerate"
                )


class _MomentAccumulator:
    """count / sum / sum-of-squares in float64; associative, merge-friendly."""

    def __init__(self):
        self.count = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, values: np.ndarray) -> None:
        self.count += values.size
        self.total += float(values.sum(dtype=np.float64))
        self.total_sq += float(np.square(values, dtype=np.float64).sum(dtype=np.float64))

    def stats(self, label: str) -> tuple[float, float]:
        if self.count == 0:
            raise EmptyPoolError(f"no ID pixels available to fit the {label} normalizer")
        mean = self.total / self.count
        # Population (1/N) standard deviation.
        var = max(self.total_sq / self.count - mean * mean, 0.0)
        std = float(np.sqrt(var))
        if std < STD_FLOOR:
            raise DegenerateScoreError(
                f"{label} std {std:g} below floor {STD_FLOOR:g} on the fitting split"
            )
        return mean, std


def fit_normalizer(
    manifest: DatasetManifest,
    geometry: GeometryStats,
    energy_cfg: EnergyConfig = EnergyConfig(),
    split: str = "val_id",
) -> NormalizerStats:
    """Fit score means/stds over the ID pixels of a pure-ID split.

    Only ID-role pixels contribute; no OOD pixel ever influences a statistic.
    """
    entries = manifest.entries(split)
    if not entries:
        raise EmptyPoolError(f"manifest has no samples in split {split!r}")
    index_of = {s.id: i for i, s in enumerate(manifest.samples)}
    neco_acc, energy_acc = _MomentAccumulator(), _MomentAccumulator()
    for entry in entries:
        sample = load_sample(manifest, index_of[entry.id])
        roles = remap_labels(sample.labels, manifest.num_classes, manifest.ignore_label)
        id_mask = roles.id_mask
        if not id_mask.any():
            continue
        neco_acc.add(neco_map(sample.features, geometry).values[id_mask])
        energy_acc.add(energy_map(sample.logits, energy_cfg).values[id_mask])
    neco_mean, neco_std = neco_acc.stats("raw geometric score")
    energy_mean, energy_std = energy_acc.stats("raw energy score")
    return NormalizerStats(
        neco_mean=neco_mean,
        neco_std=neco_std,
        energy_mean=energy_mean,
        energy_std=energy_std,
        fit_meta={
            "num_pixels": neco_acc.count,
            "manifest_hash": manifest.source_sha256,
            "split": split,
            "temperature": energy_cfg.temperature,
        },
    )


def standardize(value, mean: float, std: float):
    """(value - mean) / std; works on scalars and arrays."""
    if std < STD_FLOOR:
        raise DegenerateScoreError(f"std {std:g} below floor {STD_FLOOR:g}")
    return (value - mean) / std


def hybrid_map(
    neco: ScoreMap,
    energy: ScoreMap,
    norm: NormalizerStats,
    cfg: FusionConfig = FusionConfig(),
) -> ScoreMap:
    """Convex fusion of standardized geometric and energy maps, negated to
    higher-means-OOD."""
    for name, m in (("geometric", neco), ("energy", energy)):
        if m.orientation != HIGHER_ID:
            raise OrientationError(f"{name} map must be oriented higher-means-ID")
    if neco.shape != energy.shape:
        raise ShapeMismatchError(f"map shapes differ: {neco.shape} vs {energy.shape}")
    z_neco = standardize(neco.values, norm.neco_mean, norm.neco_std)
    z_energy = standardize(energy.values, norm.energy_mean, norm.energy_std)
    s_id = cfg.alpha * z_neco + (1.0 - cfg.alpha) * z_energy
    valid = None
    if neco.valid is not None or energy.valid is not None:
        valid = neco.valid_mask() & energy.valid_mask()
    return ScoreMap(values=-s_id, orientation=HIGHER_OOD, valid=valid)


def negate_standardized(score: ScoreMap, mean: float, std: float) -> ScoreMap:
    """-(value - mean)/std with the orientation flipped to higher-means-OOD.

    Strictly decreasing, so pixel orderings are exactly reversed.
    """
    if score.orientation != HIGHER_ID:
        raise OrientationError("negate_standardized expects a higher-means-ID map")
    return ScoreMap(
        values=-standardize(score.values, mean, std),
        orientation=HIGHER_OOD,
        valid=score.valid,
    )


def write_normalizer_stats(stats: NormalizerStats, path: str | Path) -> None:
    doc = {
        "neco_mean": repr(stats.neco_mean),
        "neco_std": repr(stats.neco_std),
        "energy_mean": repr(stats.energy_mean),
        "energy_std": repr(stats.energy_std),
        "fit_meta": stats.fit_meta,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_normalizer_stats(path: str | Path) -> NormalizerStats:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return NormalizerStats(
        neco_mean=float(doc["neco_mean"]),
        neco_std=float(doc["neco_std"]),
        energy_mean=float(doc["energy_mean"]),
        energy_std=float(doc["energy_std"]),
        fit_meta=doc.get("fit_meta", {}),
    )
