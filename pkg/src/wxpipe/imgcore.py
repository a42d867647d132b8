"""Image containers, PNG/JPEG decoding, PNG encoding and CIELAB conversion.

Images are immutable 8-bit RGB rasters. Color conversion targets CIELAB under
the D65 white point via the standard sRGB piecewise transfer function, which
is the substrate the superpixel stage measures color distances in.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import PIL.Image

from .errors import CorruptImageError, UnsupportedFormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8"

# sRGB (linear) -> XYZ, D65 white point. Rows sum to the white point
# (0.95047, 1.00000, 1.08883), so (255,255,255) maps to L=100 exactly.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = _SRGB_TO_XYZ.sum(axis=1)


@dataclass(frozen=True)
class Image:
    """8-bit RGB raster, row-major (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) uint8 array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.all(self.data == other.data))


@dataclass(frozen=True)
class LabImage:
    """Per-pixel (L, a, b) float triples with the same layout as Image."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) float array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Lab components must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def load_image(path) -> Image:
    """Decode a PNG or baseline JPEG file into an Image.

    Raises FileNotFoundError, UnsupportedFormatError for any other format,
    and CorruptImageError when a recognized file fails to decode.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(_PNG_MAGIC):
        fmt = "PNG"
    elif raw.startswith(_JPEG_MAGIC):
        fmt = "JPEG"
    else:
        raise UnsupportedFormatError(f"{path}: not a PNG or JPEG file")
    try:
        with PIL.Image.open(io.BytesIO(raw)) as im:
            im.load()
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except Exception as exc:
        raise CorruptImageError(f"{path}: corrupt {fmt} data: {exc}") from exc
    return Image(arr)


def save_image(img: Image, path) -> None:
    """Encode an Image as PNG. Lossless: load_image(path) returns an equal Image."""
    pil = PIL.Image.fromarray(np.asarray(img.data), mode="RGB")
    pil.save(str(path), format="PNG")


def rgb_to_lab(img: Image) -> LabImage:
    """Convert to CIELAB (sRGB primaries, D65 white point, standard gamma)."""
    rgb = img.data.astype(np.float64) / 255.0
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_D65
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return LabImage(lab)
