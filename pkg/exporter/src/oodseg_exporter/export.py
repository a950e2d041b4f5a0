"""Dump decoder features, logits, and labels from a segmenter checkpoint.

One forward pass per image captures the hooked decoder activations and the
output logits together; both are bilinearly upsampled to the label grid so
pixel roles stay exact, while labels themselves are only ever resized with
nearest-neighbor (no new label values can appear). The result is a
directory of NPY arrays plus a manifest.json in the layout the scoring
toolkit consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
SPLITS = ("train", "val_id", "test")
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}
CONDITION_DELIMITER = "__"  # <stem>__<condition> filename convention
DEFAULT_CONDITION = "unknown"


class ExportError(Exception):
    """Base error for dataset export failures."""


class LayerNotFoundError(ExportError):
    pass


class ResolutionMismatchError(ExportError):
    pass


@dataclass(frozen=True)
class ExportSpec:
    """What to run and how to shape the dump.

    input_size is (H, W); images are bilinearly resized to it and
    ImageNet-normalized before the forward pass, labels are nearest-
    neighbor resized to the same grid. split is the fallback assignment
    when the image directory is flat; subdirectories named after splits
    override it per file.
    """

    checkpoint: Path
    layer: str
    input_size: tuple[int, int] = (256, 512)
    num_classes: int = 19
    ignore_label: int = 255
    split: str = "test"

    def __post_init__(self):
        object.__setattr__(self, "checkpoint", Path(self.checkpoint))
        h, w = self.input_size
        if h < 1 or w < 1:
            raise ValueError(f"input_size must be positive, got {self.input_size}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.ignore_label < self.num_classes:
            raise ValueError(
                f"ignore_label {self.ignore_label} collides with the ID class range"
            )


@dataclass
class _Discovered:
    image: Path
    label: Path
    split: str
    id: str = ""
    condition: str = DEFAULT_CONDITION

    def __post_init__(self):
        stem = self.image.stem
        if CONDITION_DELIMITER in stem:
            _, self.condition = stem.rsplit(CONDITION_DELIMITER, 1)
        self.id = stem


def _load_model(path: Path) -> torch.nn.Module:
    if not path.is_file():
        raise ExportError(f"checkpoint not found: {path}")
    # Checkpoints are pickled nn.Module objects (torch.save(model, path));
    # unpickling executes code, so only export from checkpoints you trust.
    obj = torch.load(path, map_location="cpu", weights_only=False)
    if isinstance(obj, dict) and isinstance(obj.get("model"), torch.nn.Module):
        obj = obj["model"]
    if not isinstance(obj, torch.nn.Module):
        raise ExportError(
            f"checkpoint {path} did not contain an nn.Module "
            f"(got {type(obj).__name__}); save with torch.save(model, path)"
        )
    obj.eval()
    return obj


def _resolve_layer(model: torch.nn.Module, name: str) -> torch.nn.Module:
    modules = dict(model.named_modules())
    if name not in modules:
        known = sorted(n for n in modules if n)
        raise LayerNotFoundError(
            f"layer {name!r} not found; available layers: {', '.join(known)}"
        )
    return modules[name]


def _find_pairs(images_dir: Path, labels_dir: Path, default_split: str) -> list[_Discovered]:
    """Pair image files with label files of the same stem.

    A split subdirectory layout (images/val_id/*.png, images/test/*.png,
    mirrored under labels/) assigns splits per directory; a flat layout
    puts everything into default_split.
    """
    if not images_dir.is_dir():
        raise ExportError(f"image directory not found: {images_dir}")
    if not labels_dir.is_dir():
        raise ExportError(f"label directory not found: {labels_dir}")
    split_dirs = [d for d in images_dir.iterdir() if d.is_dir() and d.name in SPLITS]
    groups = (
        [(d.name, d, labels_dir / d.name) for d in sorted(split_dirs)]
        if split_dirs
        else [(default_split, images_dir, labels_dir)]
    )
    pairs: list[_Discovered] = []
    for split, img_root, lab_root in groups:
        for image in sorted(img_root.iterdir()):
            if image.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            matches = sorted(lab_root.glob(image.stem + ".*")) if lab_root.is_dir() else []
            if not matches:
                raise ExportError(f"no label file for image {image.name!r} under {lab_root}")
            pairs.append(_Discovered(image=image, label=matches[0], split=split))
    if not pairs:
        raise ExportError(f"no images found under {images_dir}")
    seen: set[str] = set()
    for p in pairs:
        if p.id in seen:
            raise ExportError(f"duplicate image stem {p.id!r}; stems must be unique")
        seen.add(p.id)
    return pairs


def _preprocess_image(path: Path, size_hw: tuple[int, int]) -> torch.Tensor:
    h, w = size_hw
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((w, h), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.array(IMAGENET_MEAN, dtype=np.float32)) / np.array(
        IMAGENET_STD, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1)).unsqueeze(0)


def _load_label(path: Path, size_hw: tuple[int, int]) -> np.ndarray:
    h, w = size_hw
    with Image.open(path) as img:
        resized = img.resize((w, h), Image.NEAREST)  # never invents label values
        arr = np.asarray(resized)
    if arr.ndim == 3:  # RGB-encoded masks carry the class in every channel
        arr = arr[..., 0]
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype in (np.uint16, np.int32):
        return arr.astype(arr.dtype, copy=False)
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int32)
    raise ExportError(f"label file {path} decoded to non-integer dtype {arr.dtype}")


def _to_hwc(tensor: torch.Tensor, size_hw: tuple[int, int]) -> np.ndarray:
    """(1, C, h, w) activations -> (H, W, C) float32 on the label grid."""
    if tensor.ndim != 4 or tensor.shape[0] != 1:
        raise ExportError(f"expected a (1, C, h, w) activation, got shape {tuple(tensor.shape)}")
    up = F.interpolate(tensor.float(), size=size_hw, mode="bilinear", align_corners=False)
    return np.ascontiguousarray(up.squeeze(0).permute(1, 2, 0).numpy(), dtype=np.float32)


def export_dataset(
    spec: ExportSpec,
    images_dir: str | Path,
    labels_dir: str | Path,
    out_dir: str | Path,
) -> Path:
    """Run the model over every image/label pair and write the dataset.

    Returns the manifest path. Deterministic: a fixed checkpoint and input
    set always produce byte-identical arrays.
    """
    out = Path(out_dir)
    pairs = _find_pairs(Path(images_dir), Path(labels_dir), spec.split)
    model = _load_model(spec.checkpoint)
    layer = _resolve_layer(model, spec.layer)

    captured: list[torch.Tensor] = []
    handle = layer.register_forward_hook(lambda mod, inp, output: captured.append(output))
    feature_dim = None
    entries = []
    try:
        for pair in pairs:
            captured.clear()
            batch = _preprocess_image(pair.image, spec.input_size)
            with torch.no_grad():
                logits_raw = model(batch)
            if not captured:
                raise ExportError(
                    f"layer {spec.layer!r} produced no output during the forward pass"
                )
            features = _to_hwc(captured[-1], spec.input_size)
            logits = _to_hwc(logits_raw, spec.input_size)
            if logits.shape[2] != spec.num_classes:
                raise ResolutionMismatchError(
                    f"model emits {logits.shape[2]} logit channels but the export "
                    f"declares num_classes={spec.num_classes}"
                )
            labels = _load_label(pair.label, spec.input_size)
            if feature_dim is None:
                feature_dim = features.shape[2]

            rel = {
                "feature_path": f"features/{pair.id}.npy",
                "logit_path": f"logits/{pair.id}.npy",
                "label_path": f"labels/{pair.id}.npy",
            }
            for key, array in (("feature_path", features), ("logit_path", logits), ("label_path", labels)):
                target = out / rel[key]
                target.parent.mkdir(parents=True, exist_ok=True)
                np.save(target, np.ascontiguousarray(array))
            entries.append({"id": pair.id, "condition": pair.condition, "split": pair.split, **rel})
    finally:
        handle.remove()

    manifest = {
        "version": "1",
        "num_classes": spec.num_classes,
        "ignore_label": spec.ignore_label,
        "samples": entries,
        "meta": {
            "checkpoint": spec.checkpoint.name,
            "layer": spec.layer,
            "feature_dim": int(feature_dim),
            "input_size": list(spec.input_size),
        },
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path
