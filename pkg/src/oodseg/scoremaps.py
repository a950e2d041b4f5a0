"""Per-pixel score map carrier with an explicit orientation flag.

Every scoring operation declares whether larger values mean "more OOD" or
"more ID"; evaluation refuses maps with the wrong orientation instead of
silently flipping signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HIGHER_OOD = "higher_ood"
HIGHER_ID = "higher_id"

_ORIENTATIONS = (HIGHER_OOD, HIGHER_ID)


@dataclass
class ScoreMap:
    """H x W real-valued pixel scores plus orientation and validity mask."""

    values: np.ndarray
    orientation: str
    valid: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError(f"score map must be 2-D (H, W), got shape {self.values.shape}")
        if self.orientation not in _ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.valid is not None:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.values.shape:
                raise ValueError("validity mask shape differs from score map shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def valid_mask(self) -> np.ndarray:
        """Validity mask, materialized as all-True when unset."""
        if self.valid is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.valid
