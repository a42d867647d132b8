"""Feature extraction and the WXFEAT interchange format.

Two self-contained classical extractors (joint RGB color histogram and a
gridded gradient-orientation histogram) keep the pipeline runnable without
any neural network. Externally computed deep features enter through WXFEAT
files:

    WXFEAT 1 <extractor_name> <dimension>
    <image_id>,<v1>,...,<vd>

One row per image, values printed with full round-trip precision, UTF-8.
Image ids must not contain commas or newlines; extractor names must not
contain whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionInconsistencyError,
    DuplicateIdError,
    MalformedHeaderError,
    FeatureFileError,
    NonFiniteFeatureError,
)
from .imgcore import Image

BUILTIN_EXTRACTORS = ("color_histogram", "gradient_histogram")

# ITU-R BT.601 luma weights, applied to [0, 255] RGB.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class FeatureVector:
    image_id: str
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("feature values must be a 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteFeatureError(f"{self.image_id}: non-finite feature values")
        if self.normalized:
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"{self.image_id}: normalized vector has norm {norm}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]


@dataclass
class FeatureSet:
    extractor_name: str
    dimension: int
    entries: dict[str, FeatureVector] = field(default_factory=dict)

    def add(self, vec: FeatureVector) -> None:
        if vec.dimension != self.dimension:
            raise DimensionInconsistencyError(
                f"{vec.image_id}: dimension {vec.dimension}, set expects {self.dimension}"
            )
        if vec.image_id in self.entries:
            raise DuplicateIdError(f"duplicate image_id {vec.image_id!r}")
        self.entries[vec.image_id] = vec


def extract_color_histogram(
    img: Image, bins_per_channel: int = 8, image_id: str = ""
) -> FeatureVector:
    """Joint 3-D RGB histogram (bins^3 values) normalized to unit mass."""
    if bins_per_channel < 2:
        raise ValueError("bins_per_channel must be >= 2")
    b = bins_per_channel
    idx = img.data.astype(np.int64) * b // 256
    flat = (idx[..., 0] * b + idx[..., 1]) * b + idx[..., 2]
    hist = np.bincount(flat.ravel(), minlength=b**3).astype(np.float64)
    return FeatureVector(image_id, hist / hist.sum())


def extract_gradient_histogram(
    img: Image, orientation_bins: int = 9, grid_size: int = 4, image_id: str = ""
) -> FeatureVector:
    """Gradient-orientation histograms over a grid_size x grid_size cell grid.

    Gradients come from central differences on BT.601 luminance; orientations
    are unsigned, folded into [0, pi), and each pixel votes with its gradient
    magnitude into its cell's histogram. Cells normalize to unit mass, and a
    cell with no gradient energy stays all-zero. Border pixels have no
    central difference and do not vote.
    """
    h, w = img.height, img.width
    if h < 2 * grid_size or w < 2 * grid_size:
        raise ValueError(
            f"image {w}x{h} too small for a {grid_size}x{grid_size} grid "
            f"(needs at least {2 * grid_size}x{2 * grid_size})"
        )
    lum = img.data.astype(np.float64) @ _LUMA
    gx = lum[1:-1, 2:] - lum[1:-1, :-2]
    gy = lum[2:, 1:-1] - lum[:-2, 1:-1]
    mag = np.sqrt(gx * gx + gy * gy)
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    ori = np.minimum((theta / np.pi * orientation_bins).astype(np.int64), orientation_bins - 1)

    ys, xs = np.mgrid[1 : h - 1, 1 : w - 1]
    cell = (ys * grid_size // h) * grid_size + (xs * grid_size // w)
    flat_bin = cell.ravel() * orientation_bins + ori.ravel()
    hist = np.bincount(
        flat_bin, weights=mag.ravel(), minlength=grid_size**2 * orientation_bins
    )
    per_cell = hist.reshape(grid_size**2, orientation_bins)
    mass = per_cell.sum(axis=1, keepdims=True)
    np.divide(per_cell, mass, out=per_cell, where=mass > 0)
    return FeatureVector(image_id, per_cell.ravel())


def l2_normalize(vec: FeatureVector) -> FeatureVector:
    """Scale to unit Euclidean norm; the all-zero vector passes through."""
    norm = float(np.linalg.norm(vec.values))
    if norm == 0.0:
        return FeatureVector(vec.image_id, vec.values, normalized=False)
    return FeatureVector(vec.image_id, vec.values / norm, normalized=True)


def extract_features(img: Image, extractor_name: str, image_id: str = "") -> FeatureVector:
    if extractor_name == "color_histogram":
        return extract_color_histogram(img, image_id=image_id)
    if extractor_name == "gradient_histogram":
        return extract_gradient_histogram(img, image_id=image_id)
    raise ValueError(f"unknown extractor {extractor_name!r}; built-ins: {BUILTIN_EXTRACTORS}")


def write_feature_file(feature_set: FeatureSet, path) -> None:
    name = feature_set.extractor_name
    if not name or any(ch.isspace() for ch in name):
        raise FeatureFileError(f"extractor name {name!r} must be non-empty without whitespace")
    lines = [f"WXFEAT 1 {name} {feature_set.dimension}"]
    for image_id, vec in feature_set.entries.items():
        if not image_id or "," in image_id or "\n" in image_id:
            raise FeatureFileError(f"image_id {image_id!r} must be non-empty without commas/newlines")
        if vec.dimension != feature_set.dimension:
            raise DimensionInconsistencyError(
                f"{image_id}: dimension {vec.dimension}, header says {feature_set.dimension}"
            )
        lines.append(image_id + "," + ",".join(repr(v) for v in vec.values.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_feature_file(path) -> FeatureSet:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise MalformedHeaderError(f"{path}: empty file")
    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != "WXFEAT" or header[1] != "1":
        raise MalformedHeaderError(f"{path}: bad header {lines[0]!r}")
    try:
        dimension = int(header[3])
    except ValueError:
        raise MalformedHeaderError(f"{path}: bad dimension {header[3]!r}") from None
    if dimension < 1:
        raise MalformedHeaderError(f"{path}: dimension must be >= 1, got {dimension}")
    out = FeatureSet(extractor_name=header[2], dimension=dimension)
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != dimension + 1:
            raise DimensionInconsistencyError(
                f"{path}:{line_no}: expected {dimension} values, found {len(parts) - 1}"
            )
        image_id = parts[0]
        if image_id in out.entries:
            raise DuplicateIdError(f"{path}:{line_no}: duplicate image_id {image_id!r}")
        try:
            values = np.array([float(p) for p in parts[1:]], dtype=np.float64)
        except ValueError:
            raise FeatureFileError(f"{path}:{line_no}: unparseable value") from None
        if not np.all(np.isfinite(values)):
            raise FeatureFileError(f"{path}:{line_no}: non-finite value")
        out.add(FeatureVector(image_id, values))
    return out
