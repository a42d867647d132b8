"""SLIC superpixel segmentation.

Localized k-means over joint (L, a, b, x, y) space: cluster centers start on
a regular grid with spacing S = sqrt(N/K), get nudged to the lowest-gradient
spot in their 3x3 neighborhood, then alternately claim pixels inside a 2Sx2S
window under the distance

    D^2 = d_color^2 + (d_xy / S)^2 * m^2

and move to the mean of their pixels. Every step has a fixed evaluation
order, so results are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import Image, LabImage


@dataclass(frozen=True)
class SlicParams:
    target_count: int
    compactness: float = 10.0
    max_iterations: int = 10
    enforce_connectivity: bool = True

    def __post_init__(self):
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if not self.compactness > 0:
            raise ValueError("compactness must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Segmentation:
    """Per-pixel segment ids covering the contiguous range [0, segment_count)."""

    labels: np.ndarray
    segment_count: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.int32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w) label array, got shape {arr.shape}")
        counts = np.bincount(arr.ravel(), minlength=max(self.segment_count, 1))
        if arr.min() < 0 or arr.max() >= self.segment_count or np.any(counts[: self.segment_count] == 0):
            raise ValueError("labels must cover [0, segment_count) with every id present")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def _initial_centers(w: int, h: int, k: int) -> np.ndarray:
    """Centers of a near-square grid, in pixel-center coordinates, row-major.

    Using (i + 0.5) * step - 0.5 puts each center at the centroid of its grid
    cell (pixel centers sit at integer coordinates), which keeps spatial
    assignment symmetric: a uniform 100x100 image with K=4 splits into exact
    50x50 blocks instead of off-by-one slabs.
    """
    n_x = max(1, math.ceil(math.sqrt(k * w / h)))
    n_y = max(1, math.ceil(k / n_x))
    step_x = w / n_x
    step_y = h / n_y
    centers = []
    for j in range(n_y):
        for i in range(n_x):
            centers.append(((i + 0.5) * step_x - 0.5, (j + 0.5) * step_y - 0.5))
            if len(centers) == k:
                return np.array(centers, dtype=np.float64)
    return np.array(centers, dtype=np.float64)


def _gradient(lab: np.ndarray) -> np.ndarray:
    """Squared Lab gradient magnitude; border pixels get +inf (never chosen)."""
    h, w = lab.shape[:2]
    g = np.full((h, w), np.inf)
    if h >= 3 and w >= 3:
        dx = lab[1:-1, 2:, :] - lab[1:-1, :-2, :]
        dy = lab[2:, 1:-1, :] - lab[:-2, 1:-1, :]
        g[1:-1, 1:-1] = (dx * dx).sum(axis=2) + (dy * dy).sum(axis=2)
    return g


def _perturb_centers(centers: np.ndarray, lab: np.ndarray) -> np.ndarray:
    """Move each center to a strictly lower-gradient pixel in its 3x3 patch.

    Ties (uniform regions) keep the original grid position so the analytic
    grid cases stay exact. Returns (k, 5) rows of (x, y, L, a, b).
    """
    h, w = lab.shape[:2]
    g = _gradient(lab)
    out = np.empty((len(centers), 5), dtype=np.float64)
    for idx, (cx, cy) in enumerate(centers):
        px = min(max(int(math.floor(cx)), 0), w - 1)
        py = min(max(int(math.floor(cy)), 0), h - 1)
        best_g = g[py, px]
        best = None
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                x, y = px + dx, py + dy
                if 0 <= x < w and 0 <= y < h and g[y, x] < best_g:
                    best_g = g[y, x]
                    best = (x, y)
        if best is not None:
            px, py = best
            cx, cy = float(px), float(py)
        out[idx] = (cx, cy, *lab[py, px])
    return out


def slic_segment(lab: LabImage, params: SlicParams) -> Segmentation:
    """Segment a Lab image into roughly params.target_count superpixels."""
    h, w = lab.height, lab.width
    n = h * w
    k = params.target_count
    if k > n:
        raise ValueError(f"target_count {k} exceeds pixel count {n}")

    data = lab.data
    s = math.sqrt(n / k)
    spatial_scale = (params.compactness / s) ** 2
    centers = _perturb_centers(_initial_centers(w, h, k), data)

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    flat_x = np.tile(xs, h)
    flat_y = np.repeat(ys, w)
    flat_lab = data.reshape(n, 3)

    labels = np.full((h, w), -1, dtype=np.int64)
    for _ in range(params.max_iterations):
        dist = np.full((h, w), np.inf)
        labels.fill(-1)
        for idx in range(k):
            cx, cy, cl, ca, cb = centers[idx]
            x0 = max(0, math.ceil(cx - s))
            x1 = min(w - 1, math.floor(cx + s))
            y0 = max(0, math.ceil(cy - s))
            y1 = min(h - 1, math.floor(cy + s))
            if x0 > x1 or y0 > y1:
                continue
            win = data[y0 : y1 + 1, x0 : x1 + 1, :]
            d_c2 = (
                (win[..., 0] - cl) ** 2
                + (win[..., 1] - ca) ** 2
                + (win[..., 2] - cb) ** 2
            )
            d_s2 = ((ys[y0 : y1 + 1] - cy) ** 2)[:, None] + ((xs[x0 : x1 + 1] - cx) ** 2)[None, :]
            d2 = d_c2 + d_s2 * spatial_scale
            dist_win = dist[y0 : y1 + 1, x0 : x1 + 1]
            upd = d2 < dist_win
            labels[y0 : y1 + 1, x0 : x1 + 1][upd] = idx
            dist_win[upd] = d2[upd]

        flat_labels = labels.ravel()
        missing = np.flatnonzero(flat_labels < 0)
        if missing.size:
            # Pixels outside every window: nearest center overall, first
            # (lowest-index) center wins ties via argmin.
            d_c2 = ((flat_lab[missing, None, :] - centers[None, :, 2:]) ** 2).sum(axis=2)
            d_s2 = (flat_x[missing, None] - centers[None, :, 0]) ** 2 + (
                flat_y[missing, None] - centers[None, :, 1]
            ) ** 2
            flat_labels[missing] = np.argmin(d_c2 + d_s2 * spatial_scale, axis=1)

        counts = np.bincount(flat_labels, minlength=k).astype(np.float64)
        occupied = counts > 0
        fields = (flat_x, flat_y, flat_lab[:, 0], flat_lab[:, 1], flat_lab[:, 2])
        for col, field in enumerate(fields):
            sums = np.bincount(flat_labels, weights=field, minlength=k)
            centers[occupied, col] = sums[occupied] / counts[occupied]

    if params.enforce_connectivity:
        labels = _enforce_connectivity(labels, k)
    labels, count = _compact_labels(labels)
    return Segmentation(labels=labels, segment_count=count)


def _connected_components(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of equal-label regions, ids in raster order."""
    comp = np.full(labels.shape, -1, dtype=np.int64)
    base = 0
    for label_id in np.unique(labels):
        mask = labels == label_id
        sub, n_sub = ndimage.label(mask)
        comp[mask] = sub[mask] - 1 + base
        base += n_sub
    comp, count = _compact_labels(comp)
    return comp, count


def _compact_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber labels to [0, count) in order of first raster appearance."""
    flat = labels.ravel()
    uniq, first = np.unique(flat, return_index=True)
    order = np.argsort(first, kind="stable")
    remap = np.empty(uniq.max() + 1, dtype=np.int64)
    remap[uniq[order]] = np.arange(len(uniq))
    return remap[flat].reshape(labels.shape), len(uniq)


def _adjacency(comp: np.ndarray, count: int):
    """Per-component border-contact counts: comp id -> (neighbor ids, counts)."""
    a = np.concatenate([comp[:, :-1].ravel(), comp[:-1, :].ravel()])
    b = np.concatenate([comp[:, 1:].ravel(), comp[1:, :].ravel()])
    sel = a != b
    a, b = a[sel], b[sel]
    lo = np.concatenate([a, b])
    hi = np.concatenate([b, a])
    keys, key_counts = np.unique(lo * count + hi, return_counts=True)
    neighbors: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    owner = keys // count
    other = keys % count
    starts = np.searchsorted(owner, np.arange(count + 1))
    for c in range(count):
        sl = slice(starts[c], starts[c + 1])
        neighbors[c] = (other[sl], key_counts[sl])
    return neighbors


def _merge_pass(comp: np.ndarray, count: int, small: np.ndarray) -> np.ndarray:
    """Union each flagged component into the neighbor sharing the most border.

    Ties go to the lowest component id (raster-ordered ids, so first-seen
    wins). Returns the per-pixel group labels, not yet compacted.
    """
    neighbors = _adjacency(comp, count)
    parent = np.arange(count, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for c in range(count):
        if not small[c]:
            continue
        own = find(c)
        tally: dict[int, int] = {}
        nbr_ids, nbr_counts = neighbors[c]
        for nid, cnt in zip(nbr_ids, nbr_counts):
            root = find(int(nid))
            if root != own:
                tally[root] = tally.get(root, 0) + int(cnt)
        if not tally:
            continue
        target = min(tally, key=lambda r: (-tally[r], r))
        parent[own] = target

    roots = np.array([find(i) for i in range(count)], dtype=np.int64)
    return roots[comp]


def _enforce_connectivity(labels: np.ndarray, k: int) -> np.ndarray:
    """Absorb stray connected components below N/(4K) pixels into neighbors.

    Every cluster keeps an anchor: its largest component (ties to the
    first-seen one) is never absorbed, so heavy fragmentation (noise images)
    cannot collapse the segment count below the number of surviving
    clusters. If fragments above the size threshold push the count past 2K,
    the smallest segments merge until the bound holds.
    """
    n = labels.size
    comp, count = _connected_components(labels)
    flat_comp = comp.ravel()
    sizes = np.bincount(flat_comp, minlength=count)
    uniq, first = np.unique(flat_comp, return_index=True)
    label_of_comp = np.empty(count, dtype=np.int64)
    label_of_comp[uniq] = labels.ravel()[first]
    anchor = np.zeros(count, dtype=bool)
    best: dict[int, int] = {}
    for c in range(count):
        lbl = label_of_comp[c]
        if lbl not in best or sizes[c] > sizes[best[lbl]]:
            best[lbl] = c
    anchor[list(best.values())] = True
    merged = _merge_pass(comp, count, (sizes < n / (4.0 * k)) & ~anchor)

    comp, count = _compact_labels(merged)
    while count > 2 * k:
        sizes = np.bincount(comp.ravel(), minlength=count)
        small = np.zeros(count, dtype=bool)
        small[np.argmin(sizes)] = True
        comp, count = _compact_labels(_merge_pass(comp, count, small))
    return comp


def boundary_map(seg: Segmentation) -> np.ndarray:
    """Boolean map marking pixels whose right or down neighbor has a
    different label; the last row/column only compare existing neighbors."""
    lab = seg.labels
    out = np.zeros(lab.shape, dtype=bool)
    out[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    out[:-1, :] |= lab[:-1, :] != lab[1:, :]
    return out


def segmentation_to_image(seg: Segmentation) -> Image:
    """Debug visualization: each segment id hashed to a stable pseudo-color."""
    ids = seg.labels.astype(np.uint64) + np.uint64(1)
    mixed = ids * np.uint64(0x9E3779B97F4A7C15)
    rgb = np.stack(
        [
            (mixed >> np.uint64(16)) & np.uint64(0xFF),
            (mixed >> np.uint64(32)) & np.uint64(0xFF),
            (mixed >> np.uint64(48)) & np.uint64(0xFF),
        ],
        axis=2,
    ).astype(np.uint8)
    return Image(rgb)
