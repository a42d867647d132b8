import numpy as np
import pytest

from wxpipe.features import FeatureVector
from wxpipe.imgcore import Image


@pytest.fixture
def noise_image():
    def make(height=32, width=32, seed=0):
        rng = np.random.default_rng(seed)
        return Image(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))

    return make


def uniform_image(height, width, color):
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:] = color
    return Image(arr)


def separable_blobs(n_per_class=100, seed=7):
    """Two Gaussian blobs clipped into unit disks around (+2, 0) and (-2, 0),
    so the gap between the classes is at least 2 by construction."""
    rng = np.random.default_rng(seed)

    def blob(center_x, n):
        pts = rng.normal(0.0, 0.4, size=(n, 2))
        norms = np.linalg.norm(pts, axis=1)
        pts *= np.minimum(1.0, 1.0 / np.maximum(norms, 1e-12))[:, None]
        pts[:, 0] += center_x
        return pts

    pos = [FeatureVector(f"pos{i}", p) for i, p in enumerate(blob(2.0, n_per_class))]
    neg = [FeatureVector(f"neg{i}", p) for i, p in enumerate(blob(-2.0, n_per_class))]
    return pos, neg
