"""Command-line pipeline: fit statistics, score samples, evaluate, export
ROC data, and generate synthetic benchmarks.

Subcommands
    fit    fit subspace geometry + score normalizers on the val_id split
    score  write per-method OOD score maps (higher = more OOD) per sample
    eval   pooled metrics report (stdout table, JSON, CSVs, figures)
    roc    export ROC curves only, from existing score maps
    synth  generate a synthetic benchmark dataset

All subcommands accept `--config FILE` (JSON, keys = flag names with
underscores); explicit flags win over the file. Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor_store
from .errors import (
    DataError,
    DegeneracyError,
    EmptyPoolError,
    OodsegError,
    ShapeMismatchError,
)
from .fusion import (
    DEFAULT_ALPHA,
    FusionConfig,
    NormalizerStats,
    fit_normalizer,
    hybrid_map,
    negate_standardized,
    read_normalizer_stats,
    write_normalizer_stats,
)
from .geometry import (
    DEFAULT_EPSILON,
    DEFAULT_SUBSAMPLE_CAP,
    DEFAULT_VARIANCE_THRESHOLD,
    FeatureAccumulator,
    GeometryStats,
    accumulate_features,
    fit_geometry,
    neco_map,
    read_geometry_stats,
    write_geometry_stats,
)
from .logit_scores import EnergyConfig, ensemble_mean_probs, energy_map, entropy_map, softmax_probs
from .metrics import (
    BinnedScorePool,
    EvalReport,
    ReportRow,
    RocCurve,
    bin_counts,
    condition_report,
    evaluate_binned_pool,
    format_report_table,
    make_bin_edges,
    pool_scores,
    report_to_dict,
    roc_curve,
    roc_curve_binned,
    score_histogram,
    write_histogram_csv,
    write_roc_csv,
)
from .scoremaps import HIGHER_OOD, ScoreMap
from .synth import SynthConfig, generate_benchmark

METHODS = ("hybrid", "neco", "energy", "entropy")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEGENERATE = 3


class UsageError(Exception):
    """Bad flags/config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which collides with the
    # data-error code; funnel through UsageError instead.
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Resolved knobs for one invocation (file values overridden by flags)."""

    manifest_path: Path | None = None
    output_dir: Path | None = None
    alpha: float = DEFAULT_ALPHA
    temperature: float = 1.0
    pca_variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD
    pca_dim_override: int | None = None
    epsilon: float = DEFAULT_EPSILON
    subsample_cap: int = DEFAULT_SUBSAMPLE_CAP
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    ensemble_logit_dirs: tuple[Path, ...] = ()
    conditions: tuple[str, ...] = ()
    split: str = "test"
    jobs: int = 1
    approximate: bool = False
    figures: bool = True

    def validate(self) -> None:
        if not self.methods:
            raise UsageError("--methods must name at least one method")
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown:
            raise UsageError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if not 0.0 <= self.alpha <= 1.0:
            raise UsageError(f"--alpha must lie in [0, 1], got {self.alpha}")
        if self.temperature <= 0:
            raise UsageError(f"--temperature must be positive, got {self.temperature}")
        if not 0.0 < self.pca_variance_threshold <= 1.0:
            raise UsageError("--pca-variance must lie in (0, 1]")
        if self.pca_dim_override is not None and self.pca_dim_override < 1:
            raise UsageError("--pca-dim must be positive")
        if self.epsilon <= 0:
            raise UsageError("--epsilon must be positive")
        if self.subsample_cap < 1:
            raise UsageError("--subsample-cap must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be positive")
        if self.split not in tensor_store.SPLITS:
            raise UsageError(f"--split must be one of {sorted(tensor_store.SPLITS)}")


# ---------------------------------------------------------------------------
# argument parsing / config-file merging


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file; flags override it")
    p.add_argument("--manifest", type=Path, default=None, help="dataset manifest JSON")
    p.add_argument("--out", type=Path, default=None, help="run output directory")
    p.add_argument("--alpha", type=float, default=None, help="hybrid weight on the geometric score (default 0.6)")
    p.add_argument("--temperature", type=float, default=None, help="energy/softmax temperature (default 1.0)")
    p.add_argument("--pca-variance", type=float, default=None, dest="pca_variance",
                   help="explained-variance threshold selecting the subspace dimension (default 0.95)")
    p.add_argument("--pca-dim", type=int, default=None, dest="pca_dim",
                   help="fixed subspace dimension, overriding --pca-variance")
    p.add_argument("--epsilon", type=float, default=None, help="denominator guard for the projection ratio (default 1e-12)")
    p.add_argument("--subsample-cap", type=int, default=None, dest="subsample_cap",
                   help="max pixels per image entering the PCA buffer (default 2048)")
    p.add_argument("--seed", type=int, default=None, help="seed for subsampling / generation (default 0; synth default 7)")
    p.add_argument("--methods", type=str, default=None,
                   help="comma-separated subset of hybrid,neco,energy,entropy (default all)")
    p.add_argument("--ensemble-dirs", type=str, default=None, dest="ensemble_dirs",
                   help="comma-separated dirs of member logits (<dir>/<sample_id>.npy) for ensemble entropy")
    p.add_argument("--conditions", type=str, default=None,
                   help="comma-separated condition tags for per-condition report rows")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers for per-sample work (default 1)")
    p.add_argument("--split", type=str, default=None, help="split to score/evaluate (default test)")
    p.add_argument("--no-figures", action="store_true", default=None, dest="no_figures",
                   help="skip figure rendering on the eval/roc path")
    p.add_argument("--approx", action="store_true", default=None,
                   help="fixed-bin approximate metrics (65536 bins); rows are flagged in the report")


def build_parser() -> _Parser:
    parser = _Parser(prog="oodseg", description="Pixel-wise OOD scoring for semantic segmentation")
    sub = parser.add_subparsers(dest="command", metavar="{fit,score,eval,roc,synth}")
    for name, text in (
        ("fit", "fit geometry and score normalizers on the val_id split"),
        ("score", "write per-method score maps for a split"),
        ("eval", "evaluate pooled metrics and write the report"),
        ("roc", "export ROC curves from existing score maps"),
        ("synth", "generate a synthetic benchmark dataset"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        p.register("type", None, str)
        _add_shared_flags(p)
        if name == "synth":
            p.add_argument("--num-classes", type=int, default=None, dest="num_classes")
            p.add_argument("--feature-dim", type=int, default=None, dest="feature_dim")
            p.add_argument("--image-size", type=int, nargs=2, default=None, dest="image_size",
                           metavar=("H", "W"))
            p.add_argument("--num-images", type=int, default=None, dest="num_images",
                           help="images per split")
            p.add_argument("--noise", type=float, default=None, help="within-class noise scale")
            p.add_argument("--ood-fraction", type=float, default=None, dest="ood_fraction")
            p.add_argument("--anomaly-mix", type=float, default=None, dest="anomaly_mix",
                           help="fraction of OOD pixels that are off-subspace (type A)")
            p.add_argument("--logit-scale", type=float, default=None, dest="logit_scale")
    return parser


def _split_csv(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


_CONFIG_KEYS = {
    "manifest", "out", "alpha", "temperature", "pca_variance", "pca_dim", "epsilon",
    "subsample_cap", "seed", "methods", "ensemble_dirs", "conditions", "jobs", "split",
    "figures", "approx", "num_classes", "feature_dim", "image_size", "num_images",
    "noise", "ood_fraction", "anomaly_mix", "logit_scale",
}


def _load_config_file(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fp:
            data = json.load(fp)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys {unknown} in {path}")
    return data


def _pick(args: argparse.Namespace, file_cfg: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_cfg and file_cfg[name] is not None:
        return file_cfg[name]
    return default


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = _load_config_file(args.config) if args.config else {}
    manifest = _pick(args, file_cfg, "manifest")
    out = _pick(args, file_cfg, "out")
    methods = _pick(args, file_cfg, "methods", METHODS)
    ensemble = _pick(args, file_cfg, "ensemble_dirs", ())
    conditions = _pick(args, file_cfg, "conditions", ())
    figures = not args.no_figures if args.no_figures is not None else bool(file_cfg.get("figures", True))
    approx = args.approx if args.approx is not None else bool(file_cfg.get("approx", False))
    cfg = RunConfig(
        manifest_path=Path(manifest) if manifest else None,
        output_dir=Path(out) if out else None,
        alpha=float(_pick(args, file_cfg, "alpha", DEFAULT_ALPHA)),
        temperature=float(_pick(args, file_cfg, "temperature", 1.0)),
        pca_variance_threshold=float(_pick(args, file_cfg, "pca_variance", DEFAULT_VARIANCE_THRESHOLD)),
        pca_dim_override=(lambda v: None if v is None else int(v))(_pick(args, file_cfg, "pca_dim")),
        epsilon=float(_pick(args, file_cfg, "epsilon", DEFAULT_EPSILON)),
        subsample_cap=int(_pick(args, file_cfg, "subsample_cap", DEFAULT_SUBSAMPLE_CAP)),
        seed=int(_pick(args, file_cfg, "seed", 0)),
        methods=_split_csv(methods),
        ensemble_logit_dirs=tuple(Path(p) for p in _split_csv(ensemble)),
        conditions=_split_csv(conditions),
        split=str(_pick(args, file_cfg, "split", "test")),
        jobs=int(_pick(args, file_cfg, "jobs", 1)),
        approximate=bool(approx),
        figures=figures,
    )
    cfg.validate()
    return cfg


def _require(cfg: RunConfig, manifest: bool = False, out: bool = False) -> None:
    if manifest and cfg.manifest_path is None:
        raise UsageError("--manifest is required for this command")
    if out and cfg.output_dir is None:
        raise UsageError("--out is required for this command")


# ---------------------------------------------------------------------------
# fit


def cmd_fit(cfg: RunConfig) -> int:
    _require(cfg, manifest=True, out=True)
    manifest = tensor_store.load_manifest(cfg.manifest_path)
    entries = manifest.entries("val_id")
    if not entries:
        raise EmptyPoolError("manifest has no samples in split 'val_id'; cannot fit")
    index_of = {s.id: i for i, s in enumerate(manifest.samples)}
    acc = FeatureAccumulator()
    for entry in entries:
        try:
            sample = tensor_store.load_sample(manifest, index_of[entry.id])
            roles = tensor_store.remap_labels(sample.labels, manifest.num_classes, manifest.ignore_label)
            acc = accumulate_features(acc, sample, roles, per_image_cap=cfg.subsample_cap, seed=cfg.seed)
        except OodsegError as exc:
            raise type(exc)(f"while fitting on sample {entry.id!r}: {exc}") from exc
    geometry = fit_geometry(
        acc,
        variance_threshold=cfg.pca_variance_threshold,
        k_override=cfg.pca_dim_override,
        epsilon=cfg.epsilon,
    )
    normalizer = fit_normalizer(manifest, geometry, EnergyConfig(temperature=cfg.temperature))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_geometry_stats(geometry, cfg.output_dir / "geometry.json")
    write_normalizer_stats(normalizer, cfg.output_dir / "normalizer.json")
    print(
        f"fit: subspace k={geometry.k} of d={geometry.d} "
        f"({geometry.fit_meta['num_pixels_used']} ID pixels, {len(entries)} samples)"
    )
    print(f"fit: wrote {cfg.output_dir / 'geometry.json'} and {cfg.output_dir / 'normalizer.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# score


def _needs(cfg: RunConfig) -> tuple[bool, bool]:
    """(features_needed, logits_needed) for the configured method set."""
    m = set(cfg.methods)
    features = bool(m & {"neco", "hybrid"})
    logits = bool(m & {"energy", "hybrid"}) or ("entropy" in m and not cfg.ensemble_logit_dirs)
    return features, logits


def _score_one(
    cfg: RunConfig,
    manifest: tensor_store.DatasetManifest,
    entry: tensor_store.SampleEntry,
    geometry: GeometryStats | None,
    normalizer: NormalizerStats | None,
    scores_dir: Path,
) -> None:
    need_features, need_logits = _needs(cfg)
    features = logits = None
    if need_features:
        features = tensor_store.read_array(manifest.resolve(entry.feature_path))
        if features.ndim != 3:
            raise ShapeMismatchError(f"sample {entry.id!r}: features must be H×W×d, got {features.shape}")
    if need_logits:
        logits = tensor_store.read_array(manifest.resolve(entry.logit_path))
        if logits.ndim != 3 or logits.shape[2] != manifest.num_classes:
            raise ShapeMismatchError(
                f"sample {entry.id!r}: logits must be H×W×{manifest.num_classes}, got {logits.shape}"
            )
        if features is not None and features.shape[:2] != logits.shape[:2]:
            raise ShapeMismatchError(
                f"sample {entry.id!r}: feature grid {features.shape[:2]} vs logit grid {logits.shape[:2]}"
            )

    methods = set(cfg.methods)
    neco_raw = neco_map(features, geometry) if methods & {"neco", "hybrid"} else None
    energy_raw = (
        energy_map(logits, EnergyConfig(temperature=cfg.temperature))
        if methods & {"energy", "hybrid"}
        else None
    )

    out_maps: dict[str, ScoreMap] = {}
    if "neco" in methods:
        out_maps["neco"] = negate_standardized(neco_raw, normalizer.neco_mean, normalizer.neco_std)
    if "energy" in methods:
        out_maps["energy"] = negate_standardized(energy_raw, normalizer.energy_mean, normalizer.energy_std)
    if "hybrid" in methods:
        out_maps["hybrid"] = hybrid_map(neco_raw, energy_raw, normalizer, FusionConfig(alpha=cfg.alpha))
    if "entropy" in methods:
        if cfg.ensemble_logit_dirs:
            members = []
            for d in cfg.ensemble_logit_dirs:
                member_path = Path(d) / f"{entry.id}.npy"
                if not member_path.exists():
                    raise DataError(f"ensemble member logits missing: {member_path}")
                members.append(tensor_store.read_array(member_path))
            probs = ensemble_mean_probs(members, temperature=cfg.temperature)
        else:
            probs = softmax_probs(logits, temperature=cfg.temperature)
        out_maps["entropy"] = entropy_map(probs)

    for method, smap in out_maps.items():
        if smap.orientation != HIGHER_OOD:
            raise OodsegError(f"internal: method {method} produced a non-OOD-oriented map")
        tensor_store.write_array(
            scores_dir / method / f"{entry.id}.npy", smap.values.astype(np.float32)
        )


def cmd_score(cfg: RunConfig) -> int:
    _require(cfg, manifest=True, out=True)
    manifest = tensor_store.load_manifest(cfg.manifest_path)
    entries = manifest.entries(cfg.split)
    if not entries:
        raise EmptyPoolError(f"manifest has no samples in split {cfg.split!r}")

    methods = set(cfg.methods)
    geometry = normalizer = None
    if methods & {"neco", "hybrid", "energy"}:
        geo_path = cfg.output_dir / "geometry.json"
        norm_path = cfg.output_dir / "normalizer.json"
        for p in (geo_path, norm_path):
            if not p.exists():
                raise DataError(f"fitted statistics not found at {p}; run `oodseg fit` first")
        geometry = read_geometry_stats(geo_path)
        normalizer = read_normalizer_stats(norm_path)

    scores_dir = cfg.output_dir / "scores"
    for method in cfg.methods:
        (scores_dir / method).mkdir(parents=True, exist_ok=True)

    def work(entry: tensor_store.SampleEntry) -> None:
        _score_one(cfg, manifest, entry, geometry, normalizer, scores_dir)

    if cfg.jobs == 1:
        for entry in entries:
            work(entry)
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            list(pool.map(work, entries))

    meta = {
        "orientation": HIGHER_OOD,
        "methods": sorted(cfg.methods),
        "alpha": cfg.alpha,
        "temperature": cfg.temperature,
        "split": cfg.split,
        "seed": cfg.seed,
        "ensemble_members": len(cfg.ensemble_logit_dirs),
        "num_samples": len(entries),
    }
    with open(scores_dir / "meta.json", "w", encoding="utf-8") as fp:
        json.dump(meta, fp, sort_keys=True, indent=2)
        fp.write("\n")
    print(f"score: wrote {len(entries)} maps per method under {scores_dir} ({', '.join(sorted(methods))})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval / roc


def _load_eval_inputs(cfg: RunConfig):
    manifest = tensor_store.load_manifest(cfg.manifest_path)
    entries = manifest.entries(cfg.split)
    if not entries:
        raise EmptyPoolError(f"manifest has no samples in split {cfg.split!r}")
    roles = []
    conditions = []
    for entry in entries:
        labels = tensor_store.read_array(manifest.resolve(entry.label_path))
        roles.append(tensor_store.remap_labels(labels, manifest.num_classes, manifest.ignore_label))
        conditions.append(entry.condition)
    scores_dir = cfg.output_dir / "scores"
    maps_by_method: dict[str, list[ScoreMap]] = {}
    for method in cfg.methods:
        maps = []
        for entry in entries:
            path = scores_dir / method / f"{entry.id}.npy"
            if not path.exists():
                raise DataError(f"score map missing for method {method!r}: {path}; run `oodseg score` first")
            maps.append(ScoreMap(values=tensor_store.read_array(path), orientation=HIGHER_OOD))
        maps_by_method[method] = maps
    return manifest, entries, roles, conditions, maps_by_method


def _binned_report(
    maps_by_method: dict[str, list[ScoreMap]],
    roles,
    conditions,
    condition_tags,
    meta: dict,
) -> EvalReport:
    rows: list[ReportRow] = []
    for method, maps in maps_by_method.items():
        for tag in [None, *list(condition_tags or ())]:
            try:
                pool = pool_scores(maps, roles, conditions=conditions, condition_filter=tag,
                                   method_name=method)
            except EmptyPoolError:
                rows.append(ReportRow(method=method, condition=tag, num_id=0, num_ood=0,
                                      approximate=True))
                continue
            both = np.concatenate([pool.id_scores, pool.ood_scores])
            edges = make_bin_edges(float(both.min()), float(both.max()))
            binned = BinnedScorePool(
                edges=edges,
                id_counts=bin_counts(pool.id_scores, edges),
                ood_counts=bin_counts(pool.ood_scores, edges),
            )
            id_mean = float(pool.id_scores.mean()) if pool.id_scores.size else None
            ood_mean = float(pool.ood_scores.mean()) if pool.ood_scores.size else None
            stats = evaluate_binned_pool(binned, id_mean, ood_mean)
            rows.append(ReportRow(method=method, condition=tag, approximate=True, **stats))
    return EvalReport(rows=rows, meta=meta)


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, manifest=True, out=True)
    manifest, entries, roles, conditions, maps_by_method = _load_eval_inputs(cfg)
    tags = list(cfg.conditions) if cfg.conditions else []
    meta = {
        "split": cfg.split,
        "alpha": cfg.alpha,
        "temperature": cfg.temperature,
        "methods": sorted(cfg.methods),
        "num_samples": len(entries),
        "manifest_sha256": manifest.source_sha256,
        "approximate": cfg.approximate,
    }
    if cfg.approximate:
        report = _binned_report(maps_by_method, roles, conditions, tags, meta)
    else:
        report = condition_report(maps_by_method, roles, conditions, condition_tags=tags, meta=meta)

    reports_dir = cfg.output_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    with open(reports_dir / "report.json", "w", encoding="utf-8") as fp:
        json.dump(report_to_dict(report), fp, sort_keys=True, indent=2)
        fp.write("\n")

    curves: dict[str, RocCurve] = {}
    hist_data = {}
    for method, maps in maps_by_method.items():
        pool = pool_scores(maps, roles, method_name=method)
        edges, id_counts, ood_counts = score_histogram(pool)
        write_histogram_csv(edges, id_counts, ood_counts, reports_dir / f"dist_{method}.csv")
        hist_data[method] = (edges, id_counts, ood_counts)
        if pool.id_scores.size and pool.ood_scores.size:
            if cfg.approximate:
                bins = make_bin_edges(
                    float(min(pool.id_scores.min(), pool.ood_scores.min())),
                    float(max(pool.id_scores.max(), pool.ood_scores.max())),
                )
                curve = roc_curve_binned(BinnedScorePool(
                    edges=bins,
                    id_counts=bin_counts(pool.id_scores, bins),
                    ood_counts=bin_counts(pool.ood_scores, bins),
                ))
            else:
                curve = roc_curve(pool)
            curves[method] = curve
            write_roc_csv(curve, reports_dir / f"roc_{method}.csv")
        else:
            print(f"warning: method {method!r} has an empty ID or OOD pool; "
                  "ROC export skipped and metrics are null", file=sys.stderr)

    if cfg.figures:
        from . import plots  # deferred: matplotlib import is slow

        if curves:
            plots.plot_roc_curves(curves, reports_dir / "roc.png")
        for method, (edges, id_counts, ood_counts) in hist_data.items():
            plots.plot_score_distribution(edges, id_counts, ood_counts, method,
                                          reports_dir / f"dist_{method}.png")
        if tags:
            plots.plot_condition_bars(report, reports_dir / "conditions.png")

    print(format_report_table(report))
    return EXIT_OK


def cmd_roc(cfg: RunConfig) -> int:
    _require(cfg, manifest=True, out=True)
    _, _, roles, conditions, maps_by_method = _load_eval_inputs(cfg)
    reports_dir = cfg.output_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    curves: dict[str, RocCurve] = {}
    for method, maps in maps_by_method.items():
        pool = pool_scores(maps, roles, method_name=method)
        if not (pool.id_scores.size and pool.ood_scores.size):
            print(f"warning: method {method!r} has an empty ID or OOD pool; skipped", file=sys.stderr)
            continue
        curve = roc_curve(pool)
        curves[method] = curve
        write_roc_csv(curve, reports_dir / f"roc_{method}.csv")
        print(f"{method}  auroc={curve.auroc:.4f}  points={len(curve.fpr)}")
    if cfg.figures and curves:
        from . import plots

        plots.plot_roc_curves(curves, reports_dir / "roc.png")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def cmd_synth(cfg: RunConfig, args: argparse.Namespace, file_cfg: dict) -> int:
    _require(cfg, out=True)
    defaults = SynthConfig()
    image_size = _pick(args, file_cfg, "image_size")
    overrides = dict(
        num_classes=int(_pick(args, file_cfg, "num_classes", defaults.num_classes)),
        feature_dim=int(_pick(args, file_cfg, "feature_dim", defaults.feature_dim)),
        image_size=tuple(image_size) if image_size else defaults.image_size,
        num_images=int(_pick(args, file_cfg, "num_images", defaults.num_images)),
        within_class_noise=float(_pick(args, file_cfg, "noise", defaults.within_class_noise)),
        ood_fraction=float(_pick(args, file_cfg, "ood_fraction", defaults.ood_fraction)),
        anomaly_mix=float(_pick(args, file_cfg, "anomaly_mix", defaults.anomaly_mix)),
        logit_scale=float(_pick(args, file_cfg, "logit_scale", defaults.logit_scale)),
        seed=int(_pick(args, file_cfg, "seed", defaults.seed)),
    )
    try:
        gen_cfg = SynthConfig(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = generate_benchmark(gen_cfg, cfg.output_dir)
    print(
        f"synth: wrote {len(manifest.samples)} samples "
        f"(K={gen_cfg.num_classes}, d={gen_cfg.feature_dim}, seed={gen_cfg.seed}) "
        f"under {cfg.output_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        cfg = resolve_config(args)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "score":
            return cmd_score(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "roc":
            return cmd_roc(cfg)
        if args.command == "synth":
            file_cfg = _load_config_file(args.config) if args.config else {}
            return cmd_synth(cfg, args, file_cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegeneracyError as exc:
        print(f"degeneracy error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OodsegError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
