"""In-distribution feature geometry: mean + truncated principal basis.

The per-pixel geometric score is the centered projection ratio

    ||P^T (h - mu)|| / (||h - mu|| + eps)

with P a d x k orthonormal basis of the dominant ID feature subspace.
The mean uses every ID validation pixel; the basis comes from an SVD of a
seeded per-image subsample, so memory stays bounded on large splits.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateVarianceError, ShapeMismatchError
from .scoremaps import HIGHER_ID, ScoreMap
from .tensor_store import DenseSample, RoleMask

DEFAULT_VARIANCE_THRESHOLD = 0.95
DEFAULT_EPSILON = 1e-12
DEFAULT_SUBSAMPLE_CAP = 2048
ORTHONORMALITY_TOL = 1e-6


@dataclass
class GeometryStats:
    """Fitted feature mean, orthonormal basis, and component variances."""

    mean: np.ndarray
    basis: np.ndarray
    epsilon: float
    explained_variance: np.ndarray
    fit_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.explained_variance = np.asarray(self.explained_variance, dtype=np.float64)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.basis.ndim != 2 or self.basis.shape[0] != self.mean.shape[0]:
            raise ValueError("basis must be (d, k) matching the mean length d")
        k = self.basis.shape[1]
        if not 1 <= k <= self.d:
            raise ValueError(f"need 1 <= k <= d, got k={k} d={self.d}")
        gram = self.basis.T @ self.basis
        if np.abs(gram - np.eye(k)).max() > ORTHONORMALITY_TOL:
            raise ValueError("basis columns are not orthonormal")
        if self.explained_variance.shape != (k,):
            raise ValueError("explained_variance must have length k")
        ev = self.explained_variance
        if (ev < 0).any() or (np.diff(ev) > 1e-12 * max(1.0, ev[0])).any():
            raise ValueError("explained_variance must be nonnegative and nonincreasing")

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]


def _sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    # Stable across processes, unlike hash().
    digest = hashlib.blake2b(sample_id.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng([seed, int.from_bytes(digest, "little")])


class FeatureAccumulator:
    """Streaming mean accumulator plus a capped per-image row buffer for the SVD.

    Accumulators merge associatively; merging equals sequential accumulation
    as long as the merge order is deterministic (sort by sample id).
    """

    def __init__(self):
        self.count: int = 0
        self.sum: np.ndarray | None = None
        self.buffers: list[np.ndarray] = []
        self.seed: int | None = None
        self.cap: int | None = None

    @property
    def dim(self) -> int | None:
        return None if self.sum is None else self.sum.shape[0]

    def buffer_rows(self) -> int:
        return sum(b.shape[0] for b in self.buffers)

    def merge(self, other: "FeatureAccumulator") -> "FeatureAccumulator":
        if self.seed is not None and other.seed is not None and self.seed != other.seed:
            raise ValueError("cannot merge accumulators built with different seeds")
        if self.dim is not None and other.dim is not None and self.dim != other.dim:
            raise ShapeMismatchError(f"feature depth mismatch: {self.dim} vs {other.dim}")
        out = FeatureAccumulator()
        out.count = self.count + other.count
        if self.sum is None:
            out.sum = None if other.sum is None else other.sum.copy()
        elif other.sum is None:
            out.sum = self.sum.copy()
        else:
            out.sum = self.sum + other.sum
        out.buffers = list(self.buffers) + list(other.buffers)
        out.seed = self.seed if self.seed is not None else other.seed
        out.cap = self.cap if self.cap is not None else other.cap
        return out


def accumulate_features(
    acc: FeatureAccumulator,
    sample: DenseSample,
    roles: RoleMask,
    per_image_cap: int = DEFAULT_SUBSAMPLE_CAP,
    seed: int = 0,
) -> FeatureAccumulator:
    """Fold one validation sample's ID pixels into the accumulator.

    The running sum/count cover every ID pixel; at most per_image_cap rows
    (seeded uniform subsample) enter the SVD buffer.
    """
    if sample.split != "val_id":
        raise ValueError(f"geometry fits on the val_id split, got sample of split {sample.split!r}")
    if per_image_cap < 1:
        raise ValueError("per_image_cap must be positive")
    if roles.codes.shape != sample.features.shape[:2]:
        raise ShapeMismatchError(
            f"sample {sample.id!r}: role mask {roles.codes.shape} vs features {sample.features.shape}"
        )
    if acc.seed is None:
        acc.seed = seed
    elif acc.seed != seed:
        raise ValueError(f"accumulator was seeded with {acc.seed}, got {seed}")
    acc.cap = per_image_cap

    rows = sample.features[roles.id_mask]
    n = rows.shape[0]
    if n == 0:
        return acc
    if acc.sum is None:
        acc.sum = np.zeros(rows.shape[1], dtype=np.float64)
    elif acc.sum.shape[0] != rows.shape[1]:
        raise ShapeMismatchError(
            f"sample {sample.id!r}: feature depth {rows.shape[1]} vs accumulator {acc.sum.shape[0]}"
        )
    acc.count += n
    acc.sum += rows.sum(axis=0, dtype=np.float64)

    if n <= per_image_cap:
        picked = rows
    else:
        rng = _sample_rng(seed, sample.id)
        idx = np.sort(rng.choice(n, size=per_image_cap, replace=False))
        picked = rows[idx]
    acc.buffers.append(picked.astype(np.float64, copy=True))
    return acc


def fit_geometry(
    acc: FeatureAccumulator,
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
    k_override: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> GeometryStats:
    """Fit mean + truncated basis from an accumulator.

    k is the smallest dimension whose cumulative explained variance reaches
    variance_threshold (inclusive at equality), unless k_override is given.
    """
    if not 0 < variance_threshold <= 1:
        raise ValueError("variance_threshold must lie in (0, 1]")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if acc.count < 2 or not acc.buffers:
        raise ValueError("need at least 2 accumulated ID pixels and a nonempty buffer")

    mean = acc.sum / acc.count
    buffer = np.vstack(acc.buffers)
    if np.all(buffer == buffer[0]):
        raise DegenerateVarianceError(
            "feature buffer is degenerate: all subsampled rows are identical (zero variance)"
        )
    centered = buffer - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variance = singular**2 / buffer.shape[0]
    total = float(variance.sum())
    if total <= 0.0:
        raise DegenerateVarianceError("centered feature buffer has zero variance")

    available = variance.shape[0]
    if k_override is not None:
        if not 1 <= k_override <= min(mean.shape[0], available):
            raise ValueError(
                f"k_override must lie in [1, {min(mean.shape[0], available)}], got {k_override}"
            )
        k = int(k_override)
    else:
        cumulative = np.cumsum(variance) / total
        k = int(np.searchsorted(cumulative, variance_threshold, side="left")) + 1
        k = min(k, available)

    # Deterministic sign convention: largest-magnitude entry of each
    # component is positive (SVD signs are otherwise arbitrary).
    for j in range(k):
        pivot = np.argmax(np.abs(vt[j]))
        if vt[j, pivot] < 0:
            vt[j] = -vt[j]

    return GeometryStats(
        mean=mean,
        basis=vt[:k].T.copy(),
        epsilon=float(epsilon),
        explained_variance=variance[:k].copy(),
        fit_meta={
            "num_pixels_used": acc.count,
            "subsample_seed": acc.seed,
            "variance_threshold": variance_threshold,
            "per_image_cap": acc.cap,
            "buffer_rows": int(buffer.shape[0]),
            "total_variance": total,
            "k_override": k_override,
        },
    )


def neco_map(features: np.ndarray, stats: GeometryStats) -> ScoreMap:
    """Centered projection-ratio score per pixel; higher means more ID-like.

    Values lie in [0, 1): the projection norm never exceeds the full norm
    and epsilon > 0 keeps the ratio strictly below one.
    """
    features = np.asarray(features)
    if features.ndim != 3 or features.shape[2] != stats.d:
        raise ShapeMismatchError(
            f"features must be (H, W, {stats.d}), got {features.shape}"
        )
    centered = features.astype(np.float64, copy=False) - stats.mean
    projected = centered @ stats.basis
    proj_norm = np.sqrt(np.einsum("hwk,hwk->hw", projected, projected))
    full_norm = np.sqrt(np.einsum("hwd,hwd->hw", centered, centered))
    values = proj_norm / (full_norm + stats.epsilon)
    return ScoreMap(values=values, orientation=HIGHER_ID)


def _floats_to_strings(arr: np.ndarray) -> list[str]:
    return [repr(float(x)) for x in np.asarray(arr, dtype=np.float64).ravel()]


def _strings_to_floats(items: list[str]) -> np.ndarray:
    return np.array([float(x) for x in items], dtype=np.float64)


def write_geometry_stats(stats: GeometryStats, path: str | Path) -> None:
    """Persist stats as JSON; floats stored as decimal strings so a reload
    is bit-identical."""
    doc = {
        "feature_dim": stats.d,
        "k": stats.k,
        "mean": _floats_to_strings(stats.mean),
        "basis": _floats_to_strings(stats.basis),  # row-major (d x k)
        "epsilon": repr(stats.epsilon),
        "explained_variance": _floats_to_strings(stats.explained_variance),
        "fit_meta": stats.fit_meta,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_geometry_stats(path: str | Path) -> GeometryStats:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    d, k = int(doc["feature_dim"]), int(doc["k"])
    return GeometryStats(
        mean=_strings_to_floats(doc["mean"]),
        basis=_strings_to_floats(doc["basis"]).reshape(d, k),
        epsilon=float(doc["epsilon"]),
        explained_variance=_strings_to_floats(doc["explained_variance"]),
        fit_meta=doc.get("fit_meta", {}),
    )
