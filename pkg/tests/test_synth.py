import numpy as np
import pytest

from oodseg import tensor_store
from oodseg.synth import SynthConfig, generate_benchmark, make_etf, span_basis


# ---------------------------------------------------------------------------
# ETF geometry


def test_etf_antipodal_pair():
    means = make_etf(2, 2)
    np.testing.assert_allclose(np.linalg.norm(means, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(means[0] @ means[1], -1.0, atol=1e-12)


def test_etf_three_classes_angle():
    means = make_etf(3, 3)
    for i in range(3):
        for j in range(i + 1, 3):
            np.testing.assert_allclose(means[i] @ means[j], -0.5, atol=1e-12)


def test_etf_gram_matrix_k4_d8():
    k = 4
    means = make_etf(k, 8)
    gram = means @ means.T
    expected = (k / (k - 1)) * np.eye(k) - np.full((k, k), 1 / (k - 1))
    np.testing.assert_allclose(gram, expected, atol=1e-9)


def test_etf_rank_and_padding():
    means = make_etf(8, 32)
    assert np.linalg.matrix_rank(means, tol=1e-9) == 7
    assert (means[:, 8:] == 0).all()
    assert span_basis(means).shape == (7, 32)


def test_etf_rejects_small_dim():
    with pytest.raises(ValueError):
        make_etf(5, 4)


# ---------------------------------------------------------------------------
# generation


def _small_cfg(**overrides):
    base = dict(num_classes=4, feature_dim=6, image_size=(8, 12), num_images=2,
                seed=3)
    base.update(overrides)
    return SynthConfig(**base)


def test_generate_loads_and_split_roles(tmp_path):
    manifest = generate_benchmark(_small_cfg(), tmp_path)
    assert len(manifest.entries("val_id")) == 2
    assert len(manifest.entries("test")) == 2
    for i, entry in enumerate(manifest.samples):
        sample = tensor_store.load_sample(manifest, i)
        roles = tensor_store.remap_labels(sample.labels, manifest.num_classes)
        n_id, n_ood, n_ignore = roles.counts()
        assert n_ignore == 0
        if entry.split == "val_id":
            assert n_ood == 0  # fitting split stays pure ID
        else:
            assert n_ood == round(0.2 * 8 * 12)
            assert (sample.labels[roles.ood_mask] == 4).all()


def test_generate_deterministic_bytes(tmp_path):
    for sub in ("a", "b"):
        generate_benchmark(_small_cfg(), tmp_path / sub)
    files_a = sorted((tmp_path / "a").rglob("*.*"))
    files_b = sorted((tmp_path / "b").rglob("*.*"))
    assert [f.name for f in files_a] == [f.name for f in files_b]
    for fa, fb in zip(files_a, files_b):
        assert fa.read_bytes() == fb.read_bytes(), fa.name


def test_generate_zero_ood_fraction(tmp_path):
    manifest = generate_benchmark(_small_cfg(ood_fraction=0.0), tmp_path)
    for i, entry in enumerate(manifest.samples):
        sample = tensor_store.load_sample(manifest, i)
        assert (sample.labels < 4).all()


def test_generated_logits_are_self_dual(tmp_path):
    cfg = _small_cfg()
    manifest = generate_benchmark(cfg, tmp_path)
    means = make_etf(cfg.num_classes, cfg.feature_dim)
    sample = tensor_store.load_sample(manifest, 0)
    expected = sample.features.astype(np.float64) @ means.T * cfg.logit_scale
    np.testing.assert_allclose(sample.logits, expected, atol=1e-3)


def test_conditions_cycle_over_tags(tmp_path):
    cfg = _small_cfg(num_images=5)
    manifest = generate_benchmark(cfg, tmp_path)
    test_conditions = [e.condition for e in manifest.entries("test")]
    assert test_conditions == ["low_light", "high_light", "low_contrast",
                               "high_contrast", "low_light"]


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(num_classes=1)
    with pytest.raises(ValueError):
        SynthConfig(num_classes=8, feature_dim=4)
    with pytest.raises(ValueError):
        SynthConfig(ood_fraction=1.5)
    with pytest.raises(ValueError):
        SynthConfig(within_class_noise=0.0)
    with pytest.raises(ValueError):
        SynthConfig(num_classes=255)
