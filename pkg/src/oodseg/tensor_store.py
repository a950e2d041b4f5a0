"""Array files, dataset manifests, and pixel-role decoding.

Array files are NPY format version 1.0, little-endian, C-order, restricted
to the dtypes {<f4, <f8, |u1, <u2, <i4}. Manifests are relocatable UTF-8
JSON with paths relative to the manifest file. Labels decode into pixel
roles: values below the class count are ID classes, the ignore sentinel
(255 unless overridden) is dropped everywhere, everything else up to 255
counts as OOD.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format

from .errors import (
    ManifestError,
    MalformedHeaderError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)

SUPPORTED_DTYPES = ("<f4", "<f8", "|u1", "<u2", "<i4")
SPLITS = ("train", "val_id", "test")
DEFAULT_IGNORE_LABEL = 255

# RoleMask codes: values >= 0 are ID class indices.
OOD_CODE = -1
IGNORE_CODE = -2


def _canonical_descr(dtype: np.dtype) -> str:
    """Little-endian descr string for a dtype, or raise if unsupported."""
    descr = dtype.newbyteorder("<").str if dtype.byteorder != "|" else dtype.str
    if descr not in SUPPORTED_DTYPES:
        raise UnsupportedDtypeError(
            f"dtype {dtype.str!r} not in supported set {SUPPORTED_DTYPES}"
        )
    return descr


def read_array(path: str | Path) -> np.ndarray:
    """Read an NPY v1.0 array file.

    The returned array is read-only; loaded data is shared, never mutated.
    Raises MalformedHeaderError, UnsupportedDtypeError, or
    TruncatedPayloadError, each naming the offending file.
    """
    path = Path(path)
    with open(path, "rb") as fp:
        try:
            version = npy_format.read_magic(fp)
        except ValueError as exc:
            raise MalformedHeaderError(f"{path}: {exc}") from exc
        if version != (1, 0):
            raise MalformedHeaderError(
                f"{path}: NPY version {version[0]}.{version[1]} not supported (need 1.0)"
            )
        try:
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(fp)
        except ValueError as exc:
            raise MalformedHeaderError(f"{path}: {exc}") from exc
        if fortran_order:
            raise MalformedHeaderError(f"{path}: Fortran-order payloads are not supported")
        # The declared descr must match the closed set exactly; no byte-order
        # normalization here, or big-endian payloads would decode silently wrong.
        if dtype.str not in SUPPORTED_DTYPES:
            raise UnsupportedDtypeError(
                f"{path}: dtype {dtype.str!r} not in supported set {SUPPORTED_DTYPES}"
            )
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = count * dtype.itemsize
        payload = fp.read(nbytes)
        if len(payload) < nbytes:
            raise TruncatedPayloadError(
                f"{path}: payload holds {len(payload) // dtype.itemsize} of "
                f"{count} declared elements"
            )
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return arr


def write_array(path: str | Path, arr: np.ndarray) -> None:
    """Write an array as NPY v1.0, little-endian, C-order.

    read_array(write_array(arr)) is the identity on bytes.
    """
    arr = np.asarray(arr)
    descr = _canonical_descr(arr.dtype)
    arr = np.ascontiguousarray(arr.astype(np.dtype(descr), copy=False))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"descr": descr, "fortran_order": False, "shape": arr.shape}
    with open(path, "wb") as fp:
        npy_format.write_array_header_1_0(fp, header)
        fp.write(arr.tobytes())


@dataclass(frozen=True)
class SampleEntry:
    id: str
    feature_path: str
    logit_path: str
    label_path: str
    condition: str
    split: str


@dataclass
class DatasetManifest:
    version: str
    num_classes: int
    ignore_label: int
    samples: list[SampleEntry]
    root: Path
    meta: dict = field(default_factory=dict)
    source_sha256: str = ""

    def entries(self, split: str | None = None) -> list[SampleEntry]:
        """Entries of one split (or all), sorted by sample id."""
        picked = [s for s in self.samples if split is None or s.split == split]
        return sorted(picked, key=lambda s: s.id)

    def resolve(self, relative: str) -> Path:
        return self.root / relative


@dataclass
class DenseSample:
    """One scene: features (H,W,d), logits (H,W,C), labels (H,W) plus tags."""

    id: str
    features: np.ndarray
    logits: np.ndarray
    labels: np.ndarray
    condition: str
    split: str


_ENTRY_FIELDS = ("id", "feature_path", "logit_path", "label_path", "condition", "split")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a dataset manifest."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: top level must be a JSON object")
    for key in ("version", "num_classes", "samples"):
        if key not in doc:
            raise ManifestError(f"{path}: missing required key {key!r}")
    if not isinstance(doc["version"], str):
        raise ManifestError(f"{path}: 'version' must be a string")
    num_classes = doc["num_classes"]
    if not isinstance(num_classes, int) or isinstance(num_classes, bool) or num_classes < 1:
        raise ManifestError(f"{path}: 'num_classes' must be a positive integer")
    ignore_label = doc.get("ignore_label", DEFAULT_IGNORE_LABEL)
    if not isinstance(ignore_label, int) or isinstance(ignore_label, bool):
        raise ManifestError(f"{path}: 'ignore_label' must be an integer")
    if ignore_label < num_classes:
        raise ManifestError(
            f"{path}: ignore_label {ignore_label} collides with the ID class range [0, {num_classes})"
        )
    if not isinstance(doc["samples"], list):
        raise ManifestError(f"{path}: 'samples' must be an array")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ManifestError(f"{path}: 'meta' must be an object")

    root = path.parent
    samples: list[SampleEntry] = []
    seen: set[str] = set()
    for i, item in enumerate(doc["samples"]):
        if not isinstance(item, dict):
            raise ManifestError(f"{path}: samples[{i}] must be an object")
        for f in _ENTRY_FIELDS:
            if f not in item or not isinstance(item[f], str):
                raise ManifestError(f"{path}: samples[{i}] missing string field {f!r}")
        if item["split"] not in SPLITS:
            raise ManifestError(
                f"{path}: samples[{i}] has unknown split {item['split']!r} (expected one of {SPLITS})"
            )
        if item["id"] in seen:
            raise ManifestError(f"{path}: duplicate sample id {item['id']!r}")
        seen.add(item["id"])
        entry = SampleEntry(**{f: item[f] for f in _ENTRY_FIELDS})
        for rel in (entry.feature_path, entry.logit_path, entry.label_path):
            if not (root / rel).is_file():
                raise ManifestError(f"{path}: sample {entry.id!r} references missing file {rel!r}")
        samples.append(entry)

    return DatasetManifest(
        version=doc["version"],
        num_classes=num_classes,
        ignore_label=ignore_label,
        samples=samples,
        root=root,
        meta=meta,
        source_sha256=hashlib.sha256(raw).hexdigest(),
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Serialize a manifest; paths stay relative so the dataset is relocatable."""
    doc = {
        "version": manifest.version,
        "num_classes": manifest.num_classes,
        "ignore_label": manifest.ignore_label,
        "samples": [
            {f: getattr(s, f) for f in _ENTRY_FIELDS} for s in manifest.samples
        ],
    }
    if manifest.meta:
        doc["meta"] = manifest.meta
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_sample(manifest: DatasetManifest, index: int) -> DenseSample:
    """Load one sample's arrays and check their mutual consistency."""
    entry = manifest.samples[index]
    features = read_array(manifest.resolve(entry.feature_path))
    logits = read_array(manifest.resolve(entry.logit_path))
    labels = read_array(manifest.resolve(entry.label_path))
    if features.ndim != 3:
        raise ShapeMismatchError(f"sample {entry.id!r}: features must be (H, W, d), got {features.shape}")
    if logits.ndim != 3:
        raise ShapeMismatchError(f"sample {entry.id!r}: logits must be (H, W, C), got {logits.shape}")
    if labels.ndim != 2:
        raise ShapeMismatchError(f"sample {entry.id!r}: labels must be (H, W), got {labels.shape}")
    if features.shape[:2] != logits.shape[:2] or features.shape[:2] != labels.shape:
        raise ShapeMismatchError(
            f"sample {entry.id!r}: inconsistent spatial shapes "
            f"features={features.shape} logits={logits.shape} labels={labels.shape}"
        )
    if logits.shape[2] != manifest.num_classes:
        raise ShapeMismatchError(
            f"sample {entry.id!r}: logit depth {logits.shape[2]} != num_classes {manifest.num_classes}"
        )
    return DenseSample(
        id=entry.id,
        features=features,
        logits=logits,
        labels=labels,
        condition=entry.condition,
        split=entry.split,
    )


@dataclass
class RoleMask:
    """Pixel roles: codes >= 0 are ID class ids, OOD_CODE is OOD, IGNORE_CODE is ignored."""

    codes: np.ndarray
    num_classes: int

    @property
    def id_mask(self) -> np.ndarray:
        return self.codes >= 0

    @property
    def ood_mask(self) -> np.ndarray:
        return self.codes == OOD_CODE

    @property
    def ignore_mask(self) -> np.ndarray:
        return self.codes == IGNORE_CODE

    def counts(self) -> tuple[int, int, int]:
        """(num_id, num_ood, num_ignore); always sums to H*W."""
        n_id = int(np.count_nonzero(self.id_mask))
        n_ood = int(np.count_nonzero(self.ood_mask))
        return n_id, n_ood, self.codes.size - n_id - n_ood


def remap_labels(
    labels: np.ndarray,
    num_classes: int,
    ignore_label: int = DEFAULT_IGNORE_LABEL,
) -> RoleMask:
    """Partition a raw label mask into ID / OOD / IGNORE roles.

    label == ignore_label -> IGNORE; label < num_classes -> ID(label);
    num_classes <= label <= 255 -> OOD. Total on uint8 input; wider integer
    dtypes reject values above 255 that are not the ignore sentinel.
    """
    labels = np.asarray(labels)
    if labels.dtype.kind not in ("u", "i"):
        raise ManifestError(f"labels must be an integer mask, got dtype {labels.dtype}")
    if labels.dtype.kind == "i" and labels.min(initial=0) < 0:
        raise ManifestError("labels must be nonnegative")
    if labels.dtype.itemsize > 1:
        bad = (labels > 255) & (labels != ignore_label)
        if bad.any():
            offender = int(labels[bad].flat[0])
            raise ManifestError(
                f"label value {offender} out of range (above 255 and != ignore_label {ignore_label})"
            )
    codes = labels.astype(np.int32)
    ood = codes >= num_classes
    codes[ood] = OOD_CODE
    codes[labels == ignore_label] = IGNORE_CODE
    return RoleMask(codes=codes, num_classes=num_classes)
