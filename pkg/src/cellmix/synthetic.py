"""Reproducible synthetic image batches.

Each image is a class-dependent constant level per channel plus a low-
amplitude plane-wave texture, so patch swaps between classes are visible in
both the pixels and their means.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .rng import Rng
from .tensor import ImageBatch, LabelBatch

SIDE_MULTIPLE = 16
TEXTURE_AMPLITUDE = 0.08


def class_level(label: int, channel: int, cls: int) -> float:
    base = (label + 1) / (cls + 1)
    return 0.1 + 0.8 * ((base + 0.17 * channel) % 1.0)


def generate_batch(B: int, C: int, side: int, cls: int, rng: Rng) -> tuple[ImageBatch, LabelBatch]:
    if B < 1 or C < 1:
        raise DomainError(f"batch size and channels must be >= 1, got B={B}, C={C}")
    if side < SIDE_MULTIPLE or side % SIDE_MULTIPLE:
        raise DomainError(f"image side {side} must be a positive multiple of {SIDE_MULTIPLE}")
    if cls < 2:
        raise DomainError(f"need at least 2 classes, got {cls}")
    labels = np.array([rng.below(cls) for _ in range(B)], dtype=np.int64)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64) / side
    data = np.empty((B, C, side, side), dtype=np.float32)
    for s in range(B):
        for ch in range(C):
            fx, fy = 1 + rng.below(8), 1 + rng.below(8)
            phase = 2.0 * math.pi * rng.random()
            wave = np.sin(2.0 * math.pi * (fx * xx + fy * yy) + phase)
            img = class_level(int(labels[s]), ch, cls) + TEXTURE_AMPLITUDE * wave
            data[s, ch] = np.clip(img, 0.0, 1.0)
    return ImageBatch(data), LabelBatch(labels, cls)
