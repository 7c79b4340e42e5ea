"""Reference Mixup, Cutout and CutMix on single ``(C, H, W)`` samples.

Mixing weights and regions come from the caller; :func:`random_region` and
:func:`apply_to_batch` provide the uniform draws the CLI uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .rng import Rng


@dataclass(frozen=True)
class RectRegion:
    top: int
    left: int
    height: int
    width: int

    @property
    def area(self) -> int:
        return self.height * self.width

    def check(self, H: int, W: int) -> None:
        if self.height < 1 or self.width < 1:
            raise DomainError(f"region {self} has zero area")
        if self.top < 0 or self.left < 0 or self.top + self.height > H or self.left + self.width > W:
            raise DomainError(f"region {self} does not lie inside a {H}x{W} image")

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.top, self.top + self.height), slice(self.left, self.left + self.width)


def _pair(x1, x2):
    x1 = np.asarray(x1, dtype=np.float32)
    x2 = np.asarray(x2, dtype=np.float32)
    if x1.shape != x2.shape:
        raise StructuralError(f"shape mismatch: {x1.shape} vs {x2.shape}")
    return x1, x2


def _mix_labels(y1, y2, lam: float) -> np.ndarray:
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y1.shape != y2.shape:
        raise StructuralError(f"label shape mismatch: {y1.shape} vs {y2.shape}")
    return (lam * y1 + (1.0 - lam) * y2).astype(np.float32)


def mixup(x1, x2, y1, y2, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-wise convex combination ``lam * x1 + (1 - lam) * x2``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"mixing weight {lam} outside [0, 1]")
    x1, x2 = _pair(x1, x2)
    # endpoints copied rather than computed so signed zeros survive
    if lam == 1.0:
        image = x1.copy()
    elif lam == 0.0:
        image = x2.copy()
    else:
        image = (lam * x1.astype(np.float64) + (1.0 - lam) * x2.astype(np.float64)).astype(np.float32)
    return image, _mix_labels(y1, y2, lam)


def cutout(x, region: RectRegion, fill: float = 0.0) -> np.ndarray:
    x = np.array(x, dtype=np.float32)
    region.check(*x.shape[-2:])
    x[(..., *region.slices)] = fill
    return x


def cutmix(x1, x2, y1, y2, region: RectRegion) -> tuple[np.ndarray, np.ndarray]:
    """Paste ``region`` of ``x2`` into ``x1``; label weight of ``x1`` is its surviving area fraction."""
    x1, x2 = _pair(x1, x2)
    H, W = x1.shape[-2:]
    region.check(H, W)
    image = x1.copy()
    image[(..., *region.slices)] = x2[(..., *region.slices)]
    lam = 1.0 - region.area / (H * W)
    return image, _mix_labels(y1, y2, lam)


def random_region(H: int, W: int, rng: Rng) -> RectRegion:
    """Uniform height, width, then top-left corner, each inclusive of every valid value."""
    h = 1 + rng.below(H)
    w = 1 + rng.below(W)
    return RectRegion(rng.below(H - h + 1), rng.below(W - w + 1), h, w)


def apply_to_batch(method: str, images: np.ndarray, onehot: np.ndarray, rng: Rng, fill: float = 0.0):
    """Apply a baseline to every sample, partnering sample ``s`` with ``perm[s]``.

    Returns ``(images, soft_labels, partners)``. Cutout leaves labels and
    partners as the identity.
    """
    images = np.asarray(images, dtype=np.float32)
    B, _, H, W = images.shape
    if method not in ("mixup", "cutout", "cutmix"):
        raise DomainError(f"unknown baseline {method!r}")
    partners = np.arange(B) if method == "cutout" else np.asarray(rng.permutation(B))
    out = np.empty_like(images)
    labels = np.empty(onehot.shape, dtype=np.float32)
    for s in range(B):
        d = partners[s]
        if method == "mixup":
            out[s], labels[s] = mixup(images[s], images[d], onehot[s], onehot[d], rng.random())
        elif method == "cutmix":
            out[s], labels[s] = cutmix(images[s], images[d], onehot[s], onehot[d], random_region(H, W, rng))
        else:
            out[s] = cutout(images[s], random_region(H, W, rng), fill)
            labels[s] = onehot[s]
    return out, labels, partners
