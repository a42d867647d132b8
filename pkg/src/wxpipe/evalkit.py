"""Average precision, mean AP, and the (extractor x setting) experiment grid.

AP uses the un-interpolated definition: sort by score descending (stable, so
tied scores keep their input order) and average precision-at-k over the
ranks k holding a positive item. The experiment grid mirrors the report
layout of the source study: one row per extractor/model, one column per
superpixel setting, each cell the mean AP over the five weather categories.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .datasetman import CategoryPartition, ImageRecord
from .errors import NoNegativesError, NoPositivesError, WxpipeError
from .features import FeatureSet, FeatureVector, extract_features, l2_normalize, read_feature_file
from .imgcore import load_image, rgb_to_lab
from .maskaug import apply_mask
from .superpixel import SlicParams, slic_segment
from .svm import TrainConfig, score, train

_TAG_TRAIN = zlib.crc32(b"train")


@dataclass(frozen=True)
class RankedItem:
    image_id: str
    score: float
    is_positive: bool


def average_precision(items: list[RankedItem]) -> float:
    """Mean of precision-at-k over the ranks k where a positive item sits."""
    if not any(it.is_positive for it in items):
        raise NoPositivesError("ranking has no positive items")
    if all(it.is_positive for it in items):
        raise NoNegativesError("ranking has no negative items")
    for it in items:
        if not np.isfinite(it.score):
            raise ValueError(f"{it.image_id}: score must be finite")
    ranked = sorted(items, key=lambda it: -it.score)
    hits = 0
    total = 0.0
    for rank, item in enumerate(ranked, start=1):
        if item.is_positive:
            hits += 1
            total += hits / rank
    return total / hits


def mean_average_precision(per_category_ap: dict[str, float]) -> float:
    if not per_category_ap:
        raise ValueError("per-category AP map is empty")
    values = list(per_category_ap.values())
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ValueError("AP values must lie in [0, 1]")
    return float(sum(values) / len(values))


@dataclass
class ResultsTable:
    """mAP per (extractor/model row, superpixel setting column), plus the
    per-category APs behind each cell."""

    rows: dict[str, dict[int, float]] = field(default_factory=dict)
    per_category: dict[str, dict[int, dict[str, float]]] = field(default_factory=dict)
    # Realized superpixel counts observed per setting, for the run log.
    segment_counts: dict[int, list[int]] = field(default_factory=dict)

    def set_cell(self, model: str, setting: int, map_value: float, aps: dict[str, float]) -> None:
        if not 0.0 <= map_value <= 1.0:
            raise ValueError(f"mAP {map_value} outside [0, 1]")
        self.rows.setdefault(model, {})[setting] = map_value
        self.per_category.setdefault(model, {})[setting] = dict(aps)

    @property
    def settings(self) -> list[int]:
        all_settings = {s for cols in self.rows.values() for s in cols}
        return sorted(all_settings)

    def to_csv(self, path) -> None:
        lines = ["model,setting,map"]
        for model in self.rows:
            for setting in sorted(self.rows[model]):
                lines.append(f"{model},{setting},{self.rows[model][setting]!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def per_category_csv(self, path) -> None:
        lines = ["model,setting,category,ap"]
        for model in self.per_category:
            for setting in sorted(self.per_category[model]):
                for category, ap in sorted(self.per_category[model][setting].items()):
                    lines.append(f"{model},{setting},{category},{ap!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def format_table(self) -> str:
        """Text table: models as rows in insertion order, settings as columns,
        4 decimal places."""
        settings = self.settings
        headers = ["Model"] + [f"{s} SP" for s in settings]
        body = [
            [model] + [
                f"{self.rows[model][s]:.4f}" if s in self.rows[model] else "-"
                for s in settings
            ]
            for model in self.rows
        ]
        widths = [max(len(row[i]) for row in [headers] + body) for i in range(len(headers))]
        def fmt(row):
            return " | ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        sep = "-+-".join("-" * width for width in widths)
        return "\n".join([fmt(headers), sep] + [fmt(row) for row in body]) + "\n"


@dataclass
class PartitionedDataset:
    records: list[ImageRecord]
    partitions: dict[str, CategoryPartition]

    def record_map(self) -> dict[str, ImageRecord]:
        return {r.image_id: r for r in self.records}


@dataclass(frozen=True)
class ExtractorSpec:
    """A grid row: a built-in extractor or per-setting WXFEAT files."""

    name: str
    feature_files: dict[int, str] | None = None

    @property
    def is_builtin(self) -> bool:
        return self.feature_files is None


def derive_train_config(base: TrainConfig, top_seed: int, category: str) -> TrainConfig:
    """Per-category training seed derived from the run seed."""
    ss = np.random.SeedSequence([top_seed, _TAG_TRAIN, zlib.crc32(category.encode("utf-8"))])
    return replace(base, seed=int(ss.generate_state(1, dtype=np.uint64)[0]))


class ExperimentStageError(WxpipeError):
    """Wraps a stage failure with (extractor, setting, category) context."""


def _cell_features(
    dataset: PartitionedDataset,
    extractor: ExtractorSpec,
    setting: int,
    mask_color: tuple[int, int, int],
    compactness: float,
    normalize: bool,
    counts: list[int],
) -> dict[str, FeatureVector]:
    if extractor.is_builtin:
        feats: dict[str, FeatureVector] = {}
        for record in dataset.records:
            img = load_image(record.path)
            if setting > 0:
                params = SlicParams(target_count=setting, compactness=compactness)
                seg = slic_segment(rgb_to_lab(img), params)
                counts.append(seg.segment_count)
                img = apply_mask(img, seg, mask_color)
            feats[record.image_id] = extract_features(img, extractor.name, record.image_id)
    else:
        files = extractor.feature_files
        path = files.get(setting)
        if path is None:
            raise ExperimentStageError(
                f"extractor {extractor.name!r} has no feature file for setting {setting}"
            )
        feature_set: FeatureSet = read_feature_file(path)
        feats = dict(feature_set.entries)
        missing = [r.image_id for r in dataset.records if r.image_id not in feats]
        if missing:
            raise ExperimentStageError(
                f"feature file {path} is missing ids: {', '.join(missing[:5])}"
                + ("..." if len(missing) > 5 else "")
            )
    if normalize:
        feats = {k: l2_normalize(v) for k, v in feats.items()}
    return feats


def _evaluate_cell(
    dataset: PartitionedDataset,
    extractor: ExtractorSpec,
    setting: int,
    cfg: TrainConfig,
    top_seed: int,
    mask_color: tuple[int, int, int],
    compactness: float,
    normalize: bool,
    counts: list[int],
) -> dict[str, float]:
    feats = _cell_features(dataset, extractor, setting, mask_color, compactness, normalize, counts)
    aps: dict[str, float] = {}
    for category in sorted(dataset.partitions):
        part = dataset.partitions[category]
        try:
            model = train(
                [feats[i] for i in part.pos_train],
                [feats[i] for i in part.neg_train],
                derive_train_config(cfg, top_seed, category),
                category=category,
            )
            ranking = [
                RankedItem(i, score(model, feats[i]), True) for i in part.pos_test
            ] + [RankedItem(i, score(model, feats[i]), False) for i in part.neg_test]
            aps[category] = average_precision(ranking)
        except WxpipeError as exc:
            raise ExperimentStageError(
                f"extractor={extractor.name} setting={setting} category={category}: {exc}"
            ) from exc
    return aps


def run_experiment(
    dataset: PartitionedDataset,
    extractors: list[ExtractorSpec],
    settings: list[int],
    cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
    mask_color: tuple[int, int, int] = (255, 255, 0),
    compactness: float = 10.0,
    normalize: bool = True,
    jobs: int = 1,
) -> ResultsTable:
    """Fill the full grid: one mAP per (extractor, setting) cell.

    Cells are independent; jobs > 1 evaluates them in a thread pool without
    changing any result.
    """
    if not settings:
        raise ValueError("settings must be non-empty")
    if not extractors:
        raise ValueError("extractors must be non-empty")
    cells = [(ex, s) for ex in extractors for s in settings]
    cell_counts: list[list[int]] = [[] for _ in cells]

    def work(args):
        (ex, s), counts = args
        return _evaluate_cell(dataset, ex, s, cfg, seed, mask_color, compactness, normalize, counts)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, zip(cells, cell_counts)))
    else:
        results = [work(args) for args in zip(cells, cell_counts)]

    table = ResultsTable()
    for (ex, s), aps, counts in zip(cells, results, cell_counts):
        table.set_cell(ex.name, s, mean_average_precision(aps), aps)
        if counts:
            table.segment_counts.setdefault(s, []).extend(counts)
    return table
