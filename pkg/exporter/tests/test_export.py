"""Exporter tests: the dump must be a valid scoring-toolkit dataset.

The scoring toolkit (oodseg) is consumed strictly through its external
surface — the manifest/NPY format readers and the installed CLI — never
through exporter code.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

pytest.importorskip("oodseg_exporter", reason="exporter package not installed")

from PIL import Image

from oodseg_exporter import (
    ExportSpec,
    LayerNotFoundError,
    ResolutionMismatchError,
    export_dataset,
    save_toy_checkpoint,
)
from oodseg_exporter.export import ExportError

NUM_CLASSES = 6
SIZE = (64, 128)  # (H, W): small grid keeps the end-to-end run fast


def _write_png(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path)


@pytest.fixture(scope="module")
def toy_setup(tmp_path_factory):
    """Checkpoint + two images (one val_id, one test with OOD/ignore labels)."""
    root = tmp_path_factory.mktemp("toy")
    checkpoint = root / "model.pt"
    save_toy_checkpoint(checkpoint, num_classes=NUM_CLASSES, width=5, seed=1)

    rng = np.random.default_rng(2)
    h, w = SIZE
    images, labels = root / "images", root / "labels"

    val_label = rng.integers(0, NUM_CLASSES, size=(h, w), dtype=np.uint8)
    _write_png(images / "val_id" / "city_a__low_light.png",
               rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
    _write_png(labels / "val_id" / "city_a__low_light.png", val_label)

    test_label = rng.integers(0, NUM_CLASSES, size=(h, w), dtype=np.uint8)
    test_label[:8, :] = 30    # raw OOD value, preserved as-is
    test_label[-4:, :] = 255  # ignore region
    _write_png(images / "test" / "city_b__high_light.png",
               rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
    _write_png(labels / "test" / "city_b__high_light.png", test_label)

    return {"root": root, "checkpoint": checkpoint, "images": images,
            "labels": labels, "test_label": test_label}


@pytest.fixture(scope="module")
def exported(toy_setup, tmp_path_factory):
    out = tmp_path_factory.mktemp("exported")
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="decoder",
                      input_size=SIZE, num_classes=NUM_CLASSES)
    manifest = export_dataset(spec, toy_setup["images"], toy_setup["labels"], out)
    return manifest


def test_manifest_loads_clean_through_primary(exported):
    from oodseg import load_manifest, load_sample, remap_labels

    m = load_manifest(exported)
    assert m.num_classes == NUM_CLASSES
    assert [(s.id, s.split, s.condition) for s in m.entries()] == [
        ("city_a__low_light", "val_id", "low_light"),
        ("city_b__high_light", "test", "high_light"),
    ]
    assert m.meta["layer"] == "decoder"
    assert m.meta["feature_dim"] == 5
    for i in range(len(m.samples)):
        sample = load_sample(m, i)
        assert sample.features.shape == (*SIZE, 5)
        assert sample.features.dtype == np.float32
        assert sample.logits.shape == (*SIZE, NUM_CLASSES)
        roles = remap_labels(sample.labels, m.num_classes, m.ignore_label)
        assert roles.codes.shape == SIZE


def test_ood_and_ignore_labels_preserved_raw(exported, toy_setup):
    from oodseg import read_array

    labels = read_array(exported.parent / "labels" / "city_b__high_light.npy")
    np.testing.assert_array_equal(labels, toy_setup["test_label"])
    assert (labels == 30).any() and (labels == 255).any()


def test_nearest_resize_invents_no_labels(toy_setup, tmp_path):
    rng = np.random.default_rng(3)
    src = rng.choice([0, 3, 5, 30, 255], size=(50, 70)).astype(np.uint8)
    images, labels = tmp_path / "img", tmp_path / "lab"
    _write_png(images / "odd_size.png", rng.integers(0, 256, size=(50, 70, 3), dtype=np.uint8))
    _write_png(labels / "odd_size.png", src)
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="decoder",
                      input_size=SIZE, num_classes=NUM_CLASSES)
    manifest = export_dataset(spec, images, labels, tmp_path / "out")
    exported = np.load(tmp_path / "out" / "labels" / "odd_size.npy")
    assert exported.shape == SIZE
    assert set(np.unique(exported)) <= set(np.unique(src))
    entry = json.loads(manifest.read_text())["samples"][0]
    assert entry["split"] == "test"  # flat layout falls back to the default split
    assert entry["condition"] == "unknown"


def test_missing_layer_lists_available(toy_setup, tmp_path):
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="bottleneck",
                      input_size=SIZE, num_classes=NUM_CLASSES)
    with pytest.raises(LayerNotFoundError, match="decoder"):
        export_dataset(spec, toy_setup["images"], toy_setup["labels"], tmp_path / "out")


def test_logit_channel_mismatch(toy_setup, tmp_path):
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="decoder",
                      input_size=SIZE, num_classes=NUM_CLASSES + 1)
    with pytest.raises(ResolutionMismatchError, match="logit channels"):
        export_dataset(spec, toy_setup["images"], toy_setup["labels"], tmp_path / "out")


def test_missing_label_file(toy_setup, tmp_path):
    rng = np.random.default_rng(4)
    images = tmp_path / "img"
    _write_png(images / "lonely.png", rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
    (tmp_path / "lab").mkdir()
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="decoder",
                      input_size=SIZE, num_classes=NUM_CLASSES)
    with pytest.raises(ExportError, match="lonely"):
        export_dataset(spec, images, tmp_path / "lab", tmp_path / "out")


def test_export_is_deterministic(toy_setup, tmp_path):
    spec = ExportSpec(checkpoint=toy_setup["checkpoint"], layer="decoder",
                      input_size=SIZE, num_classes=NUM_CLASSES)
    trees = []
    for name in ("one", "two"):
        out = tmp_path / name
        export_dataset(spec, toy_setup["images"], toy_setup["labels"], out)
        trees.append({p.relative_to(out).as_posix(): p.read_bytes()
                      for p in sorted(out.rglob("*.npy"))})
    assert trees[0] == trees[1]


def test_cli_roundtrip_through_scoring_pipeline(toy_setup, tmp_path):
    """The shipped surface end to end: export CLI, then the scoring CLI."""
    dataset, run = tmp_path / "dataset", tmp_path / "run"
    export = subprocess.run(
        [sys.executable, "-m", "oodseg_exporter.cli", "export",
         "--checkpoint", str(toy_setup["checkpoint"]), "--layer", "decoder",
         "--images", str(toy_setup["images"]), "--labels", str(toy_setup["labels"]),
         "--out", str(dataset), "--size", "64", "128",
         "--num-classes", str(NUM_CLASSES)],
        capture_output=True, text=True)
    assert export.returncode == 0, export.stderr

    base = ["--manifest", str(dataset / "manifest.json"), "--out", str(run)]
    for step in (["fit", *base, "--pca-dim", "3"],
                 ["score", *base],
                 ["eval", *base, "--no-figures"]):
        proc = subprocess.run([sys.executable, "-m", "oodseg.cli", *step],
                              capture_output=True, text=True)
        assert proc.returncode == 0, f"{step[0]} failed: {proc.stderr}"

    report = json.loads((run / "reports" / "report.json").read_text())
    methods = {row["method"] for row in report["rows"]}
    assert methods == {"hybrid", "neco", "energy", "entropy"}
    for row in report["rows"]:
        assert row["num_ood"] > 0  # the raw 30-valued region pooled as OOD
        assert 0.0 <= row["auroc"] <= 1.0


def test_cli_usage_and_data_errors(tmp_path):
    from oodseg_exporter.cli import main

    assert main([]) == 1
    assert main(["export", "--checkpoint", "x", "--layer", "d",
                 "--images", "i", "--labels", "l", "--out", "o",
                 "--split", "bogus"]) == 1
    missing = main(["export", "--checkpoint", str(tmp_path / "none.pt"),
                    "--layer", "d", "--images", str(tmp_path),
                    "--labels", str(tmp_path), "--out", str(tmp_path / "o")])
    assert missing == 2
