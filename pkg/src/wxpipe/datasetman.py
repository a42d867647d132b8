"""Dataset manifests and train/test partitioning.

A manifest is a CSV with header ``image_id,path,category,author,license,source_url``
so every image carries the attribution its license requires. Partitioning
first assigns every image to the train or the test side once (a stratified
global split), then builds each category's binary problem from those pools:
the category's own images are the positives, and negatives are sampled as
evenly as possible from the other categories, matched in size to the
positive lists. Reusing the global split across the five binary problems
keeps any image from appearing in one category's training set and another's
test set.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CategoryMissingError,
    DuplicateIdError,
    InsufficientNegativesError,
    MalformedRowError,
    MissingFileError,
    UnknownCategoryError,
)

CATEGORIES = ("cloudy", "foggy", "rainy", "snowy", "sunny")
MANIFEST_HEADER = ["image_id", "path", "category", "author", "license", "source_url"]

# Stage tags for seed derivation; every random draw in partitioning comes
# from PCG64 seeded with (seed, stage tag, category tags).
_TAG_GLOBAL_SPLIT = zlib.crc32(b"global_split")
_TAG_NEGATIVES = zlib.crc32(b"negatives")


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    path: str
    category: str
    author: str = ""
    license: str = ""
    source_url: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise UnknownCategoryError(
                f"unknown category {self.category!r} (expected one of {', '.join(CATEGORIES)})"
            )


@dataclass(frozen=True)
class CategoryPartition:
    category: str
    pos_train: tuple[str, ...]
    pos_test: tuple[str, ...]
    neg_train: tuple[str, ...]
    neg_test: tuple[str, ...]

    def __post_init__(self):
        lists = (self.pos_train, self.pos_test, self.neg_train, self.neg_test)
        seen: set[str] = set()
        for ids in lists:
            for image_id in ids:
                if image_id in seen:
                    raise ValueError(f"image_id {image_id!r} appears in two partition lists")
                seen.add(image_id)


def load_manifest(path, validate_paths: bool = False) -> list[ImageRecord]:
    """Parse a manifest CSV; optionally check that every image file exists."""
    path = Path(path)
    records: list[ImageRecord] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise MalformedRowError(
                f"{path}: bad header {header!r}, expected {MANIFEST_HEADER!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise MalformedRowError(
                    f"{path}:{row_no}: expected {len(MANIFEST_HEADER)} fields, found {len(row)}"
                )
            image_id, img_path, category, author, license_, source_url = row
            if not image_id:
                raise MalformedRowError(f"{path}:{row_no}: empty image_id")
            if image_id in seen:
                raise DuplicateIdError(f"{path}:{row_no}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            try:
                record = ImageRecord(image_id, img_path, category, author, license_, source_url)
            except UnknownCategoryError as exc:
                raise UnknownCategoryError(f"{path}:{row_no}: {exc}") from None
            if validate_paths and not Path(img_path).is_file():
                raise MissingFileError(f"{path}:{row_no}: image file not found: {img_path}")
            records.append(record)
    return records


def write_manifest(records: list[ImageRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for r in records:
            writer.writerow([r.image_id, r.path, r.category, r.author, r.license, r.source_url])


def _category_tag(category: str) -> int:
    return zlib.crc32(category.encode("utf-8"))


def _global_split(
    records: list[ImageRecord], train_fraction: float, seed: int
) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    """Stratified one-time train/test assignment of every image."""
    by_category: dict[str, list[str]] = {}
    for r in records:
        by_category.setdefault(r.category, []).append(r.image_id)
    train_pool: dict[str, list[str]] = {}
    test_pool: dict[str, list[str]] = {}
    for category, ids in by_category.items():
        rng = np.random.default_rng([seed, _TAG_GLOBAL_SPLIT, _category_tag(category)])
        order = rng.permutation(len(ids))
        shuffled = [ids[i] for i in order]
        n_train = math.floor(train_fraction * len(ids))
        train_pool[category] = shuffled[:n_train]
        test_pool[category] = shuffled[n_train:]
    return train_pool, test_pool


def _even_quotas(total: int, capacities: list[int]) -> list[int]:
    """Split total across pools as evenly as capacity allows.

    Earlier pools receive the remainder first, so totals like 770 over four
    ample pools come out 193/193/192/192.
    """
    quotas = [0] * len(capacities)
    remaining = total
    while remaining > 0:
        open_idx = [i for i in range(len(capacities)) if quotas[i] < capacities[i]]
        if not open_idx:
            raise InsufficientNegativesError(
                f"need {total} negatives but only {sum(capacities)} are available"
            )
        base, extra = divmod(remaining, len(open_idx))
        progressed = 0
        for rank, i in enumerate(open_idx):
            want = base + (1 if rank < extra else 0)
            take = min(want, capacities[i] - quotas[i])
            quotas[i] += take
            progressed += take
        remaining -= progressed
        if progressed == 0:
            raise InsufficientNegativesError(
                f"need {total} negatives but only {sum(capacities)} are available"
            )
    return quotas


def partition(
    records: list[ImageRecord],
    category: str,
    train_fraction: float = 0.7,
    seed: int = 0,
) -> CategoryPartition:
    """Build the binary train/test partition for one category.

    Deterministic in (records, train_fraction, seed); all five categories
    derived from one seed share the same global train/test split.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    present = {r.category for r in records}
    if category not in CATEGORIES:
        raise UnknownCategoryError(f"unknown category {category!r}")
    if category not in present:
        raise CategoryMissingError(f"category {category!r} has no images in the manifest")

    train_pool, test_pool = _global_split(records, train_fraction, seed)
    pos_train = list(train_pool[category])
    pos_test = list(test_pool[category])

    others = sorted(c for c in present if c != category)
    neg_train = _sample_negatives(train_pool, others, len(pos_train), seed, category, "train")
    neg_test = _sample_negatives(test_pool, others, len(pos_test), seed, category, "test")
    return CategoryPartition(
        category=category,
        pos_train=tuple(pos_train),
        pos_test=tuple(pos_test),
        neg_train=tuple(neg_train),
        neg_test=tuple(neg_test),
    )


def _sample_negatives(
    pools: dict[str, list[str]],
    others: list[str],
    total: int,
    seed: int,
    category: str,
    side: str,
) -> list[str]:
    capacities = [len(pools[c]) for c in others]
    quotas = _even_quotas(total, capacities)
    sampled: list[str] = []
    for other, quota in zip(others, quotas):
        rng = np.random.default_rng(
            [seed, _TAG_NEGATIVES, _category_tag(category), _category_tag(other), _category_tag(side)]
        )
        order = rng.permutation(len(pools[other]))
        sampled.extend(pools[other][i] for i in order[:quota])
    return sampled


def partition_all(
    records: list[ImageRecord], train_fraction: float = 0.7, seed: int = 0
) -> dict[str, CategoryPartition]:
    """Partitions for every category present in the manifest."""
    present = sorted({r.category for r in records})
    return {c: partition(records, c, train_fraction, seed) for c in present}


def write_partitions_json(partitions: dict[str, CategoryPartition], path) -> None:
    doc = {
        category: {
            "pos_train": list(p.pos_train),
            "pos_test": list(p.pos_test),
            "neg_train": list(p.neg_train),
            "neg_test": list(p.neg_test),
        }
        for category, p in sorted(partitions.items())
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
