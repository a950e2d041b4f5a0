"""A tiny importable segmenter for exercising the export pipeline.

Real use points the exporter at a trained checkpoint; this model exists so
tests and demos can build a checkpoint in milliseconds. It still has the
shape that matters: an encoder that downsamples, a named decoder stage to
hook, and a 1x1 classification head, with logits at 1/4 input resolution.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn


class TinySegmenter(nn.Module):
    def __init__(self, num_classes: int = 19, width: int = 8, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.encoder = nn.Sequential(
            nn.Conv2d(3, width, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(width, width, 3, stride=2, padding=1),
            nn.ReLU(),
        )
        self.decoder = nn.Sequential(
            nn.Conv2d(width, width, 3, padding=1),
            nn.ReLU(),
        )
        self.head = nn.Conv2d(width, num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.decoder(self.encoder(x)))


def save_toy_checkpoint(
    path: str | Path, num_classes: int = 19, width: int = 8, seed: int = 0
) -> TinySegmenter:
    """Build a seeded TinySegmenter and pickle the whole module to path."""
    model = TinySegmenter(num_classes=num_classes, width=width, seed=seed)
    model.eval()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(model, path)
    return model
