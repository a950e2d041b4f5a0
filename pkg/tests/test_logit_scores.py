import numpy as np
import pytest

from oodseg.errors import DataError, ShapeMismatchError
from oodseg.logit_scores import (
    EnergyConfig,
    ProbMap,
    energy_map,
    ensemble_mean_probs,
    entropy_map,
    softmax_probs,
)
from oodseg.scoremaps import HIGHER_ID, HIGHER_OOD

LN2 = 0.6931471805599453
LN19 = 2.9444389791664404
# log(e^10 + 1), evaluated at 50-digit precision and frozen
LOG_E10_PLUS_1 = 10.000045398899217


def _one_pixel(*logits):
    return np.array([[list(logits)]], dtype=np.float64)


# ---------------------------------------------------------------------------
# energy


def test_energy_single_class_identity():
    for z in (-3.5, 0.0, 12.0):
        for t in (0.5, 1.0, 7.0):
            smap = energy_map(_one_pixel(z), EnergyConfig(temperature=t))
            np.testing.assert_allclose(smap.values[0, 0], z, rtol=1e-14)
    assert energy_map(_one_pixel(1.0)).orientation == HIGHER_ID


def test_energy_two_zeros_is_log_two():
    smap = energy_map(_one_pixel(0.0, 0.0))
    np.testing.assert_allclose(smap.values[0, 0], LN2, rtol=1e-15)


def test_energy_ten_zero_oracle():
    smap = energy_map(_one_pixel(10.0, 0.0))
    np.testing.assert_allclose(smap.values[0, 0], LOG_E10_PLUS_1, rtol=1e-15)


def test_energy_temperature_scaling():
    smap = energy_map(_one_pixel(10.0, 0.0), EnergyConfig(temperature=2.0))
    np.testing.assert_allclose(smap.values[0, 0], 2.0 * np.log(np.exp(5.0) + 1.0), rtol=1e-14)


def test_energy_shift_property():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(4, 5, 7))
    base = energy_map(logits).values
    shifted = energy_map(logits + 3.25).values
    np.testing.assert_allclose(shifted, base + 3.25, atol=1e-6)


def test_energy_bounds_and_monotonicity():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=(6, 6, 19)) * 5
    values = energy_map(logits).values
    top = logits.max(axis=-1)
    assert (values >= top - 1e-12).all()
    assert (values <= top + np.log(19) + 1e-12).all()
    bumped = logits.copy()
    bumped[2, 3, 7] += 0.5
    assert energy_map(bumped).values[2, 3] > values[2, 3]


def test_energy_stable_at_large_magnitude():
    values = energy_map(_one_pixel(1e4, -1e4, 0.0)).values
    assert np.isfinite(values).all()
    np.testing.assert_allclose(values[0, 0], 1e4, rtol=1e-12)


def test_energy_rejects_non_finite():
    with pytest.raises(DataError):
        energy_map(_one_pixel(np.inf, 0.0))
    with pytest.raises(ValueError):
        EnergyConfig(temperature=0.0)


# ---------------------------------------------------------------------------
# softmax / ensemble


def test_softmax_symmetry_cases():
    np.testing.assert_allclose(softmax_probs(_one_pixel(0.0, 0.0)).probs[0, 0], [0.5, 0.5])
    np.testing.assert_allclose(softmax_probs(_one_pixel(4.0, 4.0, 4.0)).probs[0, 0],
                               [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_allclose(softmax_probs(_one_pixel(LN2, 0.0)).probs[0, 0],
                               [2 / 3, 1 / 3], rtol=1e-15)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(3, 4, 6))
    before = softmax_probs(logits).probs
    after = softmax_probs(logits - 17.0).probs
    np.testing.assert_allclose(after, before, atol=1e-7)


def test_ensemble_single_member_degenerates():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(3, 3, 5))
    np.testing.assert_array_equal(ensemble_mean_probs([logits]).probs,
                                  softmax_probs(logits).probs)


def test_ensemble_mean_of_opposed_members():
    a = _one_pixel(500.0, -500.0)
    b = _one_pixel(-500.0, 500.0)
    probs = ensemble_mean_probs([a, b]).probs[0, 0]
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-15)


def test_ensemble_idempotent_on_identical_members():
    rng = np.random.default_rng(4)
    logits = rng.normal(size=(2, 2, 4))
    single = softmax_probs(logits).probs
    mean = ensemble_mean_probs([logits, logits, logits]).probs
    np.testing.assert_allclose(mean, single, rtol=1e-15)


def test_ensemble_errors():
    with pytest.raises(ValueError):
        ensemble_mean_probs([])
    with pytest.raises(ShapeMismatchError):
        ensemble_mean_probs([np.zeros((2, 2, 3)), np.zeros((2, 2, 4))])


# ---------------------------------------------------------------------------
# entropy


def test_entropy_one_hot_is_zero():
    probs = ProbMap(np.array([[[1.0, 0.0, 0.0]]]))
    values = entropy_map(probs).values
    assert values[0, 0] == 0.0
    assert entropy_map(probs).orientation == HIGHER_OOD


def test_entropy_uniform_nineteen():
    probs = ProbMap(np.full((1, 1, 19), 1 / 19))
    np.testing.assert_allclose(entropy_map(probs).values[0, 0], LN19, rtol=1e-14)


def test_entropy_half_half():
    probs = ProbMap(np.array([[[0.5, 0.5]]]))
    np.testing.assert_allclose(entropy_map(probs).values[0, 0], LN2, rtol=1e-15)


def test_entropy_range():
    rng = np.random.default_rng(5)
    logits = rng.normal(size=(8, 8, 19)) * 3
    values = entropy_map(softmax_probs(logits)).values
    assert (values >= 0).all()
    assert (values <= np.log(19) + 1e-12).all()


def test_probmap_validation():
    with pytest.raises(DataError):
        ProbMap(np.array([[[0.7, 0.7]]]))  # sums to 1.4
    with pytest.raises(DataError):
        ProbMap(np.array([[[1.2, -0.2]]]))  # out of range
    with pytest.raises(ValueError):
        ProbMap(np.zeros((2, 3)))  # not H×W×C
