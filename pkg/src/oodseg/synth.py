"""Synthetic benchmark with simplex-ETF class geometry and two anomaly regimes.

ID pixels sit at a class mean plus isotropic noise; logits come from a
self-dual linear head (weights equal the class means). Two anomaly types
probe complementary detector blind spots:

* type A displaces an ID-like feature along a direction orthogonal to the
  span of the class means. Logits are untouched (the head cannot see the
  displacement) but the subspace-projection ratio collapses.
* type B shrinks an ID-like feature radially toward the origin — the
  centroid of the ETF simplex. The projection ratio is scale-invariant
  around the centroid, so geometry is blind, while logit magnitudes (and
  hence the free energy) drop by the same factor.

Generation is deterministic: each image draws from its own substream keyed
by (seed, split, image index).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor_store
from .tensor_store import DatasetManifest, SampleEntry

DEFAULT_CONDITIONS = ("low_light", "high_light", "low_contrast", "high_contrast")

_SPLIT_CODES = {"val_id": 1, "test": 2}

# Displacement magnitude for off-subspace anomalies, in units of the
# within-class noise scale. The lower bound stays well clear of the noise
# floor so the projection ratio separates cleanly.
TYPE_A_SHIFT_RANGE = (6.0, 12.0)
# Radial shrink factor range for in-subspace low-evidence anomalies.
TYPE_B_SCALE_RANGE = (0.08, 0.2)


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int = 8
    feature_dim: int = 32
    image_size: tuple[int, int] = (64, 128)
    num_images: int = 8  # per split
    within_class_noise: float = 0.1
    ood_fraction: float = 0.2
    anomaly_mix: float = 0.5  # fraction of OOD pixels of type A (off-subspace)
    logit_scale: float = 10.0
    seed: int = 7
    conditions: tuple[str, ...] = DEFAULT_CONDITIONS

    def __post_init__(self):
        k, d = self.num_classes, self.feature_dim
        if not 2 <= k <= 254:
            raise ValueError(f"num_classes must be in [2, 254], got {k}")
        if d < k:
            raise ValueError(f"feature_dim {d} must be >= num_classes {k}")
        h, w = self.image_size
        if h < 1 or w < 1:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if self.num_images < 1:
            raise ValueError("num_images must be positive")
        for name in ("ood_fraction", "anomaly_mix"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.within_class_noise <= 0:
            raise ValueError("within_class_noise must be positive")
        if not self.conditions:
            raise ValueError("conditions must be nonempty")


def make_etf(num_classes: int, feature_dim: int) -> np.ndarray:
    """Simplex-ETF class mean directions as a (K, d) float64 matrix.

    Rows are unit-norm with pairwise inner products -1/(K-1) and span a
    (K-1)-dimensional subspace; coordinates beyond K are zero.
    """
    k, d = num_classes, feature_dim
    if k < 2:
        raise ValueError(f"need at least 2 classes, got {k}")
    if d < k:
        raise ValueError(f"feature_dim {d} must be >= num_classes {k}")
    core = np.sqrt(k / (k - 1.0)) * (np.eye(k) - np.full((k, k), 1.0 / k))
    means = np.zeros((k, d))
    means[:, :k] = core
    return means


def span_basis(means: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the subspace spanned by the class means."""
    k = means.shape[0]
    _, s, vt = np.linalg.svd(means, full_matrices=False)
    rank = int((s > s[0] * 1e-9).sum())
    if rank != k - 1:
        raise ValueError(f"expected class-mean rank {k - 1}, got {rank}")
    return vt[:rank]


def _image_rng(seed: int, split: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, _SPLIT_CODES[split], index])


def _render_image(
    cfg: SynthConfig, means: np.ndarray, basis: np.ndarray, split: str, index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(features f32, logits f32, labels u8) for one image."""
    h, w = cfg.image_size
    k, d = cfg.num_classes, cfg.feature_dim
    sigma = cfg.within_class_noise
    rng = _image_rng(cfg.seed, split, index)

    classes = rng.integers(0, k, size=h * w)
    features = means[classes] + sigma * rng.standard_normal((h * w, d))
    labels = classes.astype(np.uint8)

    if split == "test" and cfg.ood_fraction > 0:
        n_ood = int(round(cfg.ood_fraction * h * w))
        ood_idx = rng.choice(h * w, size=n_ood, replace=False)
        n_a = int(round(cfg.anomaly_mix * n_ood))
        a_idx, b_idx = ood_idx[:n_a], ood_idx[n_a:]

        if a_idx.size:
            # Per-pixel directions orthogonal to the class-mean span.
            g = rng.standard_normal((a_idx.size, d))
            g -= (g @ basis.T) @ basis
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            dist = rng.uniform(*TYPE_A_SHIFT_RANGE, size=(a_idx.size, 1)) * sigma
            features[a_idx] += dist * g
        if b_idx.size:
            t = rng.uniform(*TYPE_B_SCALE_RANGE, size=(b_idx.size, 1))
            features[b_idx] *= t
        labels[ood_idx] = k  # >= num_classes => OOD role

    logits = features @ means.T * cfg.logit_scale
    return (
        features.astype(np.float32).reshape(h, w, d),
        logits.astype(np.float32).reshape(h, w, k),
        labels.reshape(h, w),
    )


def generate_benchmark(cfg: SynthConfig, out_dir: str | Path) -> DatasetManifest:
    """Write a full dataset (features/logits/labels + manifest.json) under
    out_dir with splits val_id (pure ID) and test, and return the loaded
    manifest. Deterministic: same config and seed give byte-identical files.
    """
    out_dir = Path(out_dir)
    means = make_etf(cfg.num_classes, cfg.feature_dim)
    basis = span_basis(means)
    for sub in ("features", "logits", "labels"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    entries = []
    for split in ("val_id", "test"):
        for i in range(cfg.num_images):
            sample_id = f"{split}_{i:03d}"
            features, logits, labels = _render_image(cfg, means, basis, split, i)
            tensor_store.write_array(out_dir / "features" / f"{sample_id}.npy", features)
            tensor_store.write_array(out_dir / "logits" / f"{sample_id}.npy", logits)
            tensor_store.write_array(out_dir / "labels" / f"{sample_id}.npy", labels)
            entries.append(
                SampleEntry(
                    id=sample_id,
                    feature_path=f"features/{sample_id}.npy",
                    logit_path=f"logits/{sample_id}.npy",
                    label_path=f"labels/{sample_id}.npy",
                    condition=cfg.conditions[i % len(cfg.conditions)],
                    split=split,
                )
            )

    manifest = DatasetManifest(
        version="1",
        num_classes=cfg.num_classes,
        ignore_label=tensor_store.DEFAULT_IGNORE_LABEL,
        samples=entries,
        root=out_dir,
        meta={
            "generator": "synthetic-etf-benchmark",
            "seed": cfg.seed,
            "feature_dim": cfg.feature_dim,
            "within_class_noise": cfg.within_class_noise,
            "ood_fraction": cfg.ood_fraction,
            "anomaly_mix": cfg.anomaly_mix,
            "logit_scale": cfg.logit_scale,
        },
    )
    tensor_store.write_manifest(manifest, out_dir / "manifest.json")
    return tensor_store.load_manifest(out_dir / "manifest.json")
