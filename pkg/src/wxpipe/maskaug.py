"""Superpixel boundary mask augmentation.

The augmentation paints superpixel boundaries in a solid color over the
image. A superpixel count of 0 selects the raw path: the image passes
through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError
from .imgcore import Image, load_image, rgb_to_lab, save_image
from .superpixel import Segmentation, SlicParams, boundary_map, slic_segment

DEFAULT_MASK_COLOR = (255, 255, 0)


@dataclass(frozen=True)
class OverlaySpec:
    color: tuple[int, int, int] = DEFAULT_MASK_COLOR
    superpixel_count: int = 0
    compactness: float = 10.0

    def __post_init__(self):
        if self.superpixel_count < 0:
            raise ValueError("superpixel_count must be >= 0")
        if len(self.color) != 3 or any(not 0 <= c <= 255 for c in self.color):
            raise ValueError(f"invalid RGB color {self.color!r}")


def apply_mask(img: Image, seg: Segmentation, color: tuple[int, int, int]) -> Image:
    """Replace boundary pixels of seg with color; all other pixels pass through."""
    if (img.height, img.width) != (seg.height, seg.width):
        raise DimensionMismatchError(
            f"image is {img.width}x{img.height} but segmentation is {seg.width}x{seg.height}"
        )
    out = np.array(img.data)
    out[boundary_map(seg)] = np.asarray(color, dtype=np.uint8)
    return Image(out)


def augment(img: Image, spec: OverlaySpec) -> Image:
    """Raw copy at count 0, otherwise segment and paint the boundary mask."""
    if spec.superpixel_count == 0:
        return Image(np.array(img.data))
    params = SlicParams(target_count=spec.superpixel_count, compactness=spec.compactness)
    seg = slic_segment(rgb_to_lab(img), params)
    return apply_mask(img, seg, spec.color)


def augmented_name(src, count: int) -> str:
    """Output file name for a source image: stem + _sp<K>.

    Masked outputs are always PNG; the raw path (K=0) keeps the original
    extension because its bytes are copied verbatim.
    """
    src = Path(src)
    if count == 0:
        return f"{src.stem}_sp0{src.suffix}"
    return f"{src.stem}_sp{count}.png"


def augment_file(src, out_dir, spec: OverlaySpec) -> Path:
    """Augment one image file into out_dir; returns the written path."""
    src = Path(src)
    out_path = Path(out_dir) / augmented_name(src, spec.superpixel_count)
    if spec.superpixel_count == 0:
        out_path.write_bytes(src.read_bytes())
    else:
        save_image(augment(load_image(src), spec), out_path)
    return out_path
