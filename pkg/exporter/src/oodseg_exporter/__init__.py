"""Export segmentation model activations into the oodseg dataset format."""

from .export import (
    ExportError,
    ExportSpec,
    LayerNotFoundError,
    ResolutionMismatchError,
    export_dataset,
)
from .toy import TinySegmenter, save_toy_checkpoint

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportSpec",
    "LayerNotFoundError",
    "ResolutionMismatchError",
    "TinySegmenter",
    "export_dataset",
    "save_toy_checkpoint",
]
