"""Single-pass pixel-wise OOD scoring for semantic segmentation.

Scores every pixel of a scene with a subspace-projection ratio (geometry),
free energy (logits), predictive entropy, and a validation-standardized
hybrid of the first two; evaluates with exact rank-based AUROC, ROC curves,
and FPR at target TPR over globally pooled pixels.
"""

from .errors import (
    DataError,
    DegeneracyError,
    DegenerateScoreError,
    DegenerateVarianceError,
    EmptyPoolError,
    MalformedHeaderError,
    ManifestError,
    OodsegError,
    OrientationError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)
from .fusion import FusionConfig, NormalizerStats, fit_normalizer, hybrid_map, negate_standardized
from .geometry import (
    FeatureAccumulator,
    GeometryStats,
    accumulate_features,
    fit_geometry,
    neco_map,
)
from .logit_scores import EnergyConfig, ProbMap, energy_map, ensemble_mean_probs, entropy_map, softmax_probs
from .metrics import (
    EvalReport,
    ReportRow,
    RocCurve,
    ScorePool,
    auroc,
    condition_report,
    fpr_at_tpr,
    mean_scores,
    pool_scores,
    roc_curve,
    score_histogram,
)
from .scoremaps import HIGHER_ID, HIGHER_OOD, ScoreMap
from .synth import SynthConfig, generate_benchmark, make_etf
from .tensor_store import (
    DatasetManifest,
    DenseSample,
    RoleMask,
    SampleEntry,
    load_manifest,
    load_sample,
    read_array,
    remap_labels,
    write_array,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DatasetManifest",
    "DegeneracyError",
    "DegenerateScoreError",
    "DegenerateVarianceError",
    "DenseSample",
    "EmptyPoolError",
    "EnergyConfig",
    "EvalReport",
    "FeatureAccumulator",
    "FusionConfig",
    "GeometryStats",
    "HIGHER_ID",
    "HIGHER_OOD",
    "MalformedHeaderError",
    "ManifestError",
    "NormalizerStats",
    "OodsegError",
    "OrientationError",
    "ProbMap",
    "ReportRow",
    "RocCurve",
    "RoleMask",
    "SampleEntry",
    "ScoreMap",
    "ScorePool",
    "ShapeMismatchError",
    "SynthConfig",
    "TruncatedPayloadError",
    "UnsupportedDtypeError",
    "accumulate_features",
    "auroc",
    "condition_report",
    "energy_map",
    "ensemble_mean_probs",
    "entropy_map",
    "fit_geometry",
    "fit_normalizer",
    "fpr_at_tpr",
    "generate_benchmark",
    "hybrid_map",
    "load_manifest",
    "load_sample",
    "make_etf",
    "mean_scores",
    "neco_map",
    "negate_standardized",
    "pool_scores",
    "read_array",
    "remap_labels",
    "roc_curve",
    "score_histogram",
    "softmax_probs",
    "write_array",
    "write_manifest",
]
