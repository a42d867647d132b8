"""Command-line front end for the pipeline.

Subcommands: segment, augment, extract, train, evaluate, experiment. The
experiment command is driven by a single JSON config (flags override config
values) and writes results.csv, results_per_category.csv, results_table.txt,
partitions.json and run.log into the output directory. Every random choice
derives from the config's one seed, so a rerun with the same config
reproduces every output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import datasetman, evalkit, features, maskaug, svm
from .errors import WxpipeError
from .evalkit import ExtractorSpec, PartitionedDataset, RankedItem
from .imgcore import load_image, save_image, rgb_to_lab
from .superpixel import SlicParams, slic_segment, segmentation_to_image

DEFAULT_SETTINGS = [0, 25, 50, 75, 100]


@dataclass
class RunConfig:
    manifest_path: str
    output_dir: str
    settings: list[int] = field(default_factory=lambda: list(DEFAULT_SETTINGS))
    extractors: list[ExtractorSpec] = field(
        default_factory=lambda: [ExtractorSpec("color_histogram")]
    )
    train: svm.TrainConfig = field(default_factory=svm.TrainConfig)
    seed: int = 42
    mask_color: tuple[int, int, int] = maskaug.DEFAULT_MASK_COLOR
    compactness: float = 10.0
    train_fraction: float = 0.7
    normalize_features: bool = True
    validate_paths: bool = False


class ConfigError(WxpipeError):
    """RunConfig JSON fails schema validation."""


def _parse_extractor(entry) -> ExtractorSpec:
    if isinstance(entry, str):
        if entry in features.BUILTIN_EXTRACTORS:
            return ExtractorSpec(entry)
        path = Path(entry)
        if path.suffix == ".wxfeat" or path.is_file():
            name = features.read_feature_file(path).extractor_name
            return ExtractorSpec(name, feature_files={s: str(path) for s in DEFAULT_SETTINGS})
        raise ConfigError(
            f"extractor {entry!r} is neither a built-in ({', '.join(features.BUILTIN_EXTRACTORS)}) "
            "nor a readable feature file"
        )
    if isinstance(entry, dict):
        try:
            name = entry["name"]
            files = {int(k): str(v) for k, v in entry["files"].items()}
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad extractor entry {entry!r}: {exc}") from None
        return ExtractorSpec(str(name), feature_files=files)
    raise ConfigError(f"bad extractor entry {entry!r}")


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse and validate the experiment config; overrides (from flags) win."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})

    known = {
        "manifest_path", "output_dir", "settings", "extractors", "train", "seed",
        "mask_color", "compactness", "train_fraction", "normalize_features", "validate_paths",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for required in ("manifest_path", "output_dir"):
        if required not in doc:
            raise ConfigError(f"config is missing required key {required!r}")

    settings = doc.get("settings", DEFAULT_SETTINGS)
    if not isinstance(settings, list) or not settings or not all(
        isinstance(s, int) and s >= 0 for s in settings
    ):
        raise ConfigError("settings must be a non-empty list of integers >= 0")
    if len(set(settings)) != len(settings):
        raise ConfigError("settings must not repeat")

    train_doc = doc.get("train", {})
    if not isinstance(train_doc, dict):
        raise ConfigError("train must be an object")
    try:
        train_cfg = svm.TrainConfig(
            lam=float(train_doc.get("lambda", 0.1)),
            epochs=int(train_doc.get("epochs", 30)),
            seed=int(train_doc.get("seed", 42)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad train config: {exc}") from None

    mask_color = doc.get("mask_color", list(maskaug.DEFAULT_MASK_COLOR))
    if not isinstance(mask_color, (list, tuple)) or len(mask_color) != 3 or not all(
        isinstance(c, int) and 0 <= c <= 255 for c in mask_color
    ):
        raise ConfigError("mask_color must be three integers in [0, 255]")

    extractor_entries = doc.get("extractors", ["color_histogram"])
    if not isinstance(extractor_entries, list) or not extractor_entries:
        raise ConfigError("extractors must be a non-empty list")

    return RunConfig(
        manifest_path=str(doc["manifest_path"]),
        output_dir=str(doc["output_dir"]),
        settings=list(settings),
        extractors=[_parse_extractor(e) for e in extractor_entries],
        train=train_cfg,
        seed=int(doc.get("seed", 42)),
        mask_color=tuple(mask_color),
        compactness=float(doc.get("compactness", 10.0)),
        train_fraction=float(doc.get("train_fraction", 0.7)),
        normalize_features=bool(doc.get("normalize_features", True)),
        validate_paths=bool(doc.get("validate_paths", False)),
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _color(text: str):
    parts = text.split(",")
    if len(parts) != 3 or not all(p.strip().isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"expected R,G,B, got {text!r}")
    rgb = tuple(int(p) for p in parts)
    if any(c > 255 for c in rgb):
        raise argparse.ArgumentTypeError(f"channel values must be <= 255: {text!r}")
    return rgb


def cmd_segment(args) -> int:
    img = load_image(args.image)
    seg = slic_segment(
        rgb_to_lab(img),
        SlicParams(target_count=args.superpixels, compactness=args.compactness),
    )
    save_image(segmentation_to_image(seg), args.out)
    print(f"segments: {seg.segment_count}")
    return 0


def cmd_augment(args) -> int:
    records = datasetman.load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = maskaug.OverlaySpec(
        color=args.color, superpixel_count=args.superpixels, compactness=args.compactness
    )
    failures = 0
    for record in records:
        try:
            maskaug.augment_file(record.path, out_dir, spec)
        except (WxpipeError, OSError) as exc:
            failures += 1
            print(f"error: {record.image_id}: {exc}", file=sys.stderr)
    print(f"wrote {len(records) - failures} of {len(records)} images to {out_dir}")
    return 1 if failures else 0


def cmd_extract(args) -> int:
    records = datasetman.load_manifest(args.manifest)
    spec = maskaug.OverlaySpec(
        color=args.color, superpixel_count=args.superpixels, compactness=args.compactness
    )
    name = args.extractor if args.superpixels == 0 else f"{args.extractor}_sp{args.superpixels}"
    feature_set = None
    for record in records:
        img = maskaug.augment(load_image(record.path), spec)
        vec = features.extract_features(img, args.extractor, record.image_id)
        if args.normalize:
            vec = features.l2_normalize(vec)
        if feature_set is None:
            feature_set = features.FeatureSet(extractor_name=name, dimension=vec.dimension)
        feature_set.add(vec)
    if feature_set is None:
        print("error: manifest has no rows", file=sys.stderr)
        return 1
    features.write_feature_file(feature_set, args.out)
    print(f"wrote {len(feature_set.entries)} vectors of dimension {feature_set.dimension} to {args.out}")
    return 0


def _load_split_features(args):
    records = datasetman.load_manifest(args.manifest)
    part = datasetman.partition(records, args.category, args.train_fraction, args.partition_seed)
    feature_set = features.read_feature_file(args.features)
    feats = dict(feature_set.entries)
    if args.normalize:
        feats = {k: features.l2_normalize(v) for k, v in feats.items()}
    missing = [
        i
        for ids in (part.pos_train, part.pos_test, part.neg_train, part.neg_test)
        for i in ids
        if i not in feats
    ]
    if missing:
        raise WxpipeError(f"feature file is missing ids: {', '.join(missing[:5])}")
    return part, feats


def cmd_train(args) -> int:
    part, feats = _load_split_features(args)
    cfg = svm.TrainConfig(lam=args.lam, epochs=args.epochs, seed=args.train_seed)
    model = svm.train(
        [feats[i] for i in part.pos_train],
        [feats[i] for i in part.neg_train],
        cfg,
        category=args.category,
    )
    svm.save_model(model, args.out)
    print(f"trained {args.category}: final objective {model.final_objective:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    model = svm.load_model(args.model)
    args.category = model.category
    part, feats = _load_split_features(args)
    ranking = [RankedItem(i, svm.score(model, feats[i]), True) for i in part.pos_test] + [
        RankedItem(i, svm.score(model, feats[i]), False) for i in part.neg_test
    ]
    ap = evalkit.average_precision(ranking)
    print(f"AP {model.category} {ap:.6f}")
    return 0


def cmd_experiment(args) -> int:
    overrides = {
        "manifest_path": args.manifest,
        "output_dir": args.out_dir,
        "seed": args.seed,
        "settings": [int(s) for s in args.settings.split(",")] if args.settings else None,
    }
    cfg = load_run_config(args.config, overrides)
    started = time.monotonic()

    records = datasetman.load_manifest(cfg.manifest_path, validate_paths=cfg.validate_paths)
    partitions = datasetman.partition_all(records, cfg.train_fraction, cfg.seed)
    dataset = PartitionedDataset(records=records, partitions=partitions)
    table = evalkit.run_experiment(
        dataset,
        cfg.extractors,
        cfg.settings,
        cfg.train,
        seed=cfg.seed,
        mask_color=cfg.mask_color,
        compactness=cfg.compactness,
        normalize=cfg.normalize_features,
        jobs=args.jobs,
    )

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "results.csv")
    table.per_category_csv(out_dir / "results_per_category.csv")
    (out_dir / "results_table.txt").write_text(table.format_table(), encoding="utf-8")
    datasetman.write_partitions_json(partitions, out_dir / "partitions.json")
    (out_dir / "run.log").write_text(
        _run_log(cfg, table, time.monotonic() - started), encoding="utf-8"
    )
    print(table.format_table(), end="")
    print(f"results written to {out_dir}")
    return 0


def _run_log(cfg: RunConfig, table, elapsed: float) -> str:
    lines = [
        "wxpipe experiment",
        f"manifest_path = {cfg.manifest_path}",
        f"output_dir = {cfg.output_dir}",
        f"settings = {cfg.settings}",
        "extractors = " + ", ".join(e.name for e in cfg.extractors),
        f"seed = {cfg.seed}",
        f"mask_color = {tuple(cfg.mask_color)}",
        f"compactness = {cfg.compactness}",
        f"train_fraction = {cfg.train_fraction}",
        f"normalize_features = {cfg.normalize_features}",
        f"train.lambda = {cfg.train.lam}",
        f"train.epochs = {cfg.train.epochs}",
        "train.seed per category is derived from the run seed (see evalkit.derive_train_config)",
    ]
    for category in sorted(datasetman.CATEGORIES):
        derived = evalkit.derive_train_config(cfg.train, cfg.seed, category)
        lines.append(f"derived train seed[{category}] = {derived.seed}")
    for setting in sorted(table.segment_counts):
        counts = table.segment_counts[setting]
        lines.append(
            f"realized superpixel count, setting {setting}: "
            f"min={min(counts)} mean={sum(counts) / len(counts):.1f} max={max(counts)}"
        )
    lines.append(f"elapsed_seconds = {elapsed:.1f}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wxpipe",
        description="Weather image classification pipeline with superpixel mask augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one image and write a debug PNG")
    p.add_argument("image")
    p.add_argument("-k", "--superpixels", type=_positive_int, required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--compactness", type=float, default=10.0)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("augment", help="write boundary-masked copies of manifest images")
    p.add_argument("--manifest", required=True)
    p.add_argument("-k", "--superpixels", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--color", type=_color, default=maskaug.DEFAULT_MASK_COLOR)
    p.add_argument("--compactness", type=float, default=10.0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract", help="extract built-in features into a WXFEAT file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--extractor", choices=features.BUILTIN_EXTRACTORS, required=True)
    p.add_argument("-k", "--superpixels", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--color", type=_color, default=maskaug.DEFAULT_MASK_COLOR)
    p.add_argument("--compactness", type=float, default=10.0)
    p.add_argument("--normalize", action="store_true", help="L2-normalize before writing")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one category's binary classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--category", choices=datasetman.CATEGORIES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lam", type=float, default=0.1, help="regularization weight")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--train-seed", type=int, default=42)
    p.add_argument("--partition-seed", type=int, default=42)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="average precision of a model on its test split")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--partition-seed", type=int, default=42)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the full (extractor x setting) grid")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--manifest", help="override config manifest_path")
    p.add_argument("--out-dir", help="override config output_dir")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--settings", help="override config settings, e.g. 0,25,50")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        missing = exc.filename if exc.filename else exc
        print(f"error: file not found: {missing}", file=sys.stderr)
        return 1
    except (WxpipeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
