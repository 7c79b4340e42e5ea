"""Image batches, patch grids, and label containers.

Patches are indexed row-major over the grid: index ``i`` sits at grid row
``i // cols`` and column ``i % cols``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageBatch:
    """``(B, C, H, W)`` float32 tensor with finite values."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 4 or min(data.shape) < 1:
            raise StructuralError(f"image batch must be (B, C, H, W) with all dims >= 1, got {data.shape}")
        if not np.isfinite(data).all():
            raise DomainError("image batch contains NaN or Inf")
        if data is self.data:
            data = data.copy()
        object.__setattr__(self, "data", _frozen(data))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    B = property(lambda self: self.data.shape[0])
    C = property(lambda self: self.data.shape[1])
    H = property(lambda self: self.data.shape[2])
    W = property(lambda self: self.data.shape[3])

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "ImageBatch":
        """Map 8-bit pixels ``u`` to ``u / 255``."""
        pixels = np.asarray(pixels)
        if pixels.dtype != np.uint8:
            raise DomainError(f"expected uint8 pixels, got {pixels.dtype}")
        return cls(pixels.astype(np.float32) / np.float32(255))

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class PatchGrid:
    """Regular ``p x p`` tiling of an ``H x W`` image."""

    height: int
    width: int
    patch_size: int

    def __post_init__(self):
        p = self.patch_size
        if p < 1 or self.height % p or self.width % p:
            raise DomainError(
                f"patch size p={p} must divide image height H={self.height} and width W={self.width}"
            )

    @property
    def rows(self) -> int:
        return self.height // self.patch_size

    @property
    def cols(self) -> int:
        return self.width // self.patch_size

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def position(self, i: int) -> tuple[int, int]:
        """Top-left pixel ``(y, x)`` of patch ``i``."""
        if not 0 <= i < self.n:
            raise StructuralError(f"patch index {i} outside [0, {self.n})")
        r, c = divmod(i, self.cols)
        return r * self.patch_size, c * self.patch_size


class Patches:
    """Indexed view of a batch as patches, shape ``(B, n, C, p, p)``.

    ``patches[s, i]`` is the ``C x p x p`` sub-tensor of sample ``s`` at patch ``i``.
    """

    def __init__(self, grid: PatchGrid, array: np.ndarray):
        self.grid = grid
        self.array = array

    def __getitem__(self, key):
        return self.array[key]

    def __len__(self) -> int:
        return self.array.shape[0]


def split_into_patches(batch: ImageBatch, p: int) -> tuple[PatchGrid, Patches]:
    grid = PatchGrid(batch.H, batch.W, p)
    B, C = batch.B, batch.C
    view = batch.data.reshape(B, C, grid.rows, p, grid.cols, p)
    view = view.transpose(0, 2, 4, 1, 3, 5).reshape(B, grid.n, C, p, p)
    return grid, Patches(grid, view)


def reassemble(grid: PatchGrid, patches) -> ImageBatch:
    """Inverse of :func:`split_into_patches`."""
    arr = patches.array if isinstance(patches, Patches) else np.asarray(patches)
    p = grid.patch_size
    if arr.ndim != 5 or arr.shape[1] != grid.n or arr.shape[3:] != (p, p):
        raise StructuralError(
            f"patch array {arr.shape} does not cover a grid of n={grid.n} patches of size {p}"
        )
    B, _, C = arr.shape[:3]
    img = arr.reshape(B, grid.rows, grid.cols, C, p, p).transpose(0, 3, 1, 4, 2, 5)
    return ImageBatch(np.ascontiguousarray(img).reshape(B, C, grid.height, grid.width))


@dataclass(frozen=True)
class LabelBatch:
    labels: np.ndarray
    cls: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size < 1:
            raise StructuralError(f"labels must be a non-empty vector, got shape {labels.shape}")
        if self.cls < 2:
            raise DomainError(f"need at least 2 classes, got {self.cls}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise DomainError(f"labels must be integers, got {labels.dtype}")
        if labels.min() < 0 or labels.max() >= self.cls:
            raise DomainError(f"labels must lie in [0, {self.cls})")
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))

    @property
    def B(self) -> int:
        return self.labels.shape[0]

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.B, self.cls), dtype=np.float32)
        out[np.arange(self.B), self.labels] = 1.0
        return out


@dataclass(frozen=True)
class SoftLabelBatch:
    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        if w.ndim != 2:
            raise StructuralError(f"soft labels must be (B, cls), got {w.shape}")
        if (w < 0).any() or (w > 1).any():
            raise DomainError("soft label entries must lie in [0, 1]")
        if not np.allclose(w.sum(axis=1, dtype=np.float64), 1.0, rtol=0, atol=1e-6):
            raise DomainError("soft label rows must sum to 1")
        if w is self.weights:
            w = w.copy()
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def from_labels(cls, labels: LabelBatch) -> "SoftLabelBatch":
        return cls(labels.one_hot())
