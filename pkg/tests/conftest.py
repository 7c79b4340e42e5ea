import numpy as np
import pytest

from cellmix.rng import Rng
from cellmix.tensor import ImageBatch, LabelBatch


def random_batch(B, C, H, W, seed=0):
    gen = np.random.default_rng(seed)
    return ImageBatch(gen.random((B, C, H, W), dtype=np.float32))


def naive_gather(images: np.ndarray, source: np.ndarray, p: int) -> np.ndarray:
    """Copy patch by patch using pixel coordinates, independent of the reshape path."""
    B, C, H, W = images.shape
    cols = W // p
    out = np.empty_like(images)
    for s in range(B):
        for i in range(source.shape[1]):
            y, x = (i // cols) * p, (i % cols) * p
            out[s, :, y:y + p, x:x + p] = images[source[s, i], :, y:y + p, x:x + p]
    return out


@pytest.fixture
def rng():
    return Rng(12345)


@pytest.fixture
def small_batch():
    return random_batch(4, 2, 8, 8, seed=1)


@pytest.fixture
def small_labels():
    return LabelBatch(np.array([0, 1, 2, 1]), 3)
