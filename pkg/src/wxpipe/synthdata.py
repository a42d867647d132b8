"""Procedural five-class image generator for desk-scale experiments.

Each weather category gets a distinct dominant color family, far enough
apart that an 8-bin joint RGB histogram puts their mass into different bins.
Images carry a vertical sky-to-ground shade, per-pixel noise, and a few
category-tinted blobs so segmentation and gradient features have structure
to work with. Generation is deterministic in (seed, category, index).
"""

from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np

from .datasetman import CATEGORIES, ImageRecord, write_manifest
from .imgcore import Image, save_image

# Dominant base color per category, centered well inside distinct 32-wide bins.
BASE_COLORS = {
    "cloudy": (176, 176, 176),
    "foggy": (208, 208, 232),
    "rainy": (48, 80, 144),
    "snowy": (240, 240, 240),
    "sunny": (240, 176, 48),
}


def synth_image(category: str, index: int, size: int = 64, seed: int = 0) -> Image:
    rng = np.random.default_rng(
        [seed, zlib.crc32(b"synth"), zlib.crc32(category.encode()), index]
    )
    base = np.array(BASE_COLORS[category], dtype=np.float64)
    shade = np.linspace(-12.0, 12.0, size)[:, None, None]
    img = np.tile(base, (size, size, 1)) + shade
    img += rng.normal(0.0, 6.0, size=(size, size, 3))
    for _ in range(rng.integers(2, 5)):
        cx, cy = rng.integers(0, size, 2)
        r = int(rng.integers(size // 8, size // 3))
        tint = base + rng.normal(0.0, 10.0, 3)
        ys, xs = np.ogrid[:size, :size]
        blob = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        img[blob] = 0.5 * img[blob] + 0.5 * tint
    return Image(np.clip(img, 0, 255).astype(np.uint8))


def generate_dataset(
    root, images_per_class: int = 100, size: int = 64, seed: int = 0
) -> tuple[Path, list[ImageRecord]]:
    """Write PNGs plus a manifest under root; returns (manifest path, records)."""
    root = Path(root)
    image_dir = root / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for category in CATEGORIES:
        for index in range(images_per_class):
            image_id = f"{category}_{index:04d}"
            path = image_dir / f"{image_id}.png"
            save_image(synth_image(category, index, size, seed), path)
            records.append(
                ImageRecord(
                    image_id=image_id,
                    path=str(path),
                    category=category,
                    author="procedural generator",
                    license="CC0",
                    source_url="",
                )
            )
    manifest_path = root / "manifest.csv"
    write_manifest(records, manifest_path)
    return manifest_path, records
