"""Logit-side scores: temperature-scaled energy, softmax, predictive entropy.

Energy per pixel is T * log sum_c exp(logit_c / T) (max-shift stabilized),
oriented higher-means-ID. Predictive entropy of the (ensemble-averaged)
softmax is the uncertainty baseline, oriented higher-means-OOD and reported
in raw nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from .errors import DataError, ShapeMismatchError
from .scoremaps import HIGHER_ID, HIGHER_OOD, ScoreMap

PROB_SUM_TOL = 1e-5


@dataclass(frozen=True)
class EnergyConfig:
    temperature: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


@dataclass
class ProbMap:
    """H x W x C class probabilities; rows sum to one within 1e-5."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 3:
            raise ValueError(f"probs must be (H, W, C), got shape {self.probs.shape}")
        if (self.probs < -1e-7).any() or (self.probs > 1 + PROB_SUM_TOL).any():
            raise DataError("probabilities outside [0, 1 + 1e-5]")
        sums = self.probs.sum(axis=-1)
        if np.abs(sums - 1.0).max() > PROB_SUM_TOL:
            raise DataError("per-pixel probabilities do not sum to 1 within 1e-5")


def _check_logits(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits)
    if logits.ndim != 3 or logits.shape[2] < 1:
        raise ShapeMismatchError(f"logits must be (H, W, C) with C >= 1, got {logits.shape}")
    if not np.isfinite(logits).all():
        raise DataError("logits contain non-finite values")
    return logits.astype(np.float64, copy=False)


def energy_map(logits: np.ndarray, cfg: EnergyConfig = EnergyConfig()) -> ScoreMap:
    """Temperature-scaled log-sum-exp of the class logits, higher-means-ID."""
    z = _check_logits(logits)
    t = cfg.temperature
    values = t * logsumexp(z / t, axis=-1)
    return ScoreMap(values=values, orientation=HIGHER_ID)


def softmax_probs(logits: np.ndarray, temperature: float = 1.0) -> ProbMap:
    """Max-shift-stabilized softmax at the given temperature."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    z = _check_logits(logits)
    return ProbMap(probs=softmax(z / temperature, axis=-1))


def ensemble_mean_probs(member_logits: list[np.ndarray], temperature: float = 1.0) -> ProbMap:
    """Arithmetic mean of member softmax maps; one member degenerates to softmax."""
    if not member_logits:
        raise ValueError("ensemble needs at least one member")
    shapes = {np.asarray(m).shape for m in member_logits}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"ensemble members disagree in shape: {sorted(shapes)}")
    acc = None
    for member in member_logits:
        p = softmax_probs(member, temperature).probs
        acc = p if acc is None else acc + p
    return ProbMap(probs=acc / len(member_logits))


def entropy_map(probs: ProbMap) -> ScoreMap:
    """Shannon entropy in nats per pixel (0*ln 0 := 0), higher-means-OOD."""
    p = probs.probs
    values = -xlogy(p, p).sum(axis=-1)
    # One-hot rows can land at -0.0 / tiny negatives through rounding.
    np.maximum(values, 0.0, out=values)
    return ScoreMap(values=values, orientation=HIGHER_OOD)
