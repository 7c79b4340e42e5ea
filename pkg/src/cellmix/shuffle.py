"""In-place patch shuffle across a batch, with provenance and soft labels.

A fix-position mask splits the patch indices into a fixed set, which every
sample keeps, and a relation set, whose patches are permuted across the
batch without leaving their grid position. Provenance records the donor of
every output patch; soft labels are derived from it by counting.

RNG draw order per triggered batch (part of the reproducibility contract):
trigger uniform, mask indices, then one permutation (group) or one
permutation per relation index in ascending order (split).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .rng import Rng
from .tensor import ImageBatch, LabelBatch, PatchGrid, SoftLabelBatch, reassemble, split_into_patches


class ShuffleMode(enum.Enum):
    GROUP = "group"
    SPLIT = "split"

    @classmethod
    def parse(cls, value) -> "ShuffleMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown shuffle mode {value!r}; expected 'group' or 'split'") from None


def fixed_count(n: int, beta: float) -> int:
    """Number of fixed patches, ``floor(n * beta + 0.5)``."""
    return int(np.floor(n * beta + 0.5))


@dataclass(frozen=True)
class FixPositionMask:
    n: int
    beta: float
    fixed: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"patch count must be >= 1, got {self.n}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"fix ratio beta={self.beta} outside [0, 1]")
        fixed = tuple(sorted(int(i) for i in self.fixed))
        if len(set(fixed)) != len(fixed) or any(not 0 <= i < self.n for i in fixed):
            raise StructuralError(f"fixed indices must be distinct members of [0, {self.n})")
        if len(fixed) != fixed_count(self.n, self.beta):
            raise StructuralError(
                f"{len(fixed)} fixed indices, expected floor(n*beta+0.5)={fixed_count(self.n, self.beta)}"
            )
        object.__setattr__(self, "fixed", fixed)

    @property
    def m(self) -> int:
        return len(self.fixed)

    @property
    def relation(self) -> tuple[int, ...]:
        fixed = set(self.fixed)
        return tuple(i for i in range(self.n) if i not in fixed)

    @property
    def realized_f(self) -> float:
        return self.m / self.n

    def as_bool(self) -> np.ndarray:
        """Boolean vector of length n, True at fixed indices."""
        out = np.zeros(self.n, dtype=bool)
        out[list(self.fixed)] = True
        return out


@dataclass(frozen=True)
class Provenance:
    """``source[s, i]``: batch index that supplied patch ``i`` of output sample ``s``."""

    source: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.source, dtype=np.int64)
        if src.ndim != 2:
            raise StructuralError(f"provenance must be (B, n), got {src.shape}")
        if src.size and (src.min() < 0 or src.max() >= src.shape[0]):
            raise StructuralError("provenance source index outside the batch")
        src = src.copy()
        src.flags.writeable = False
        object.__setattr__(self, "source", src)

    @classmethod
    def identity(cls, B: int, n: int) -> "Provenance":
        return cls(np.repeat(np.arange(B)[:, None], n, axis=1))

    @property
    def B(self) -> int:
        return self.source.shape[0]

    @property
    def n(self) -> int:
        return self.source.shape[1]

    def is_identity(self) -> bool:
        return bool((self.source == np.arange(self.B)[:, None]).all())


@dataclass(frozen=True)
class AugmentedBatch:
    images: ImageBatch
    soft_labels: SoftLabelBatch
    provenance: Provenance
    mask: FixPositionMask | None
    triggered: bool
    patch_size: int = 0
    permutations: tuple = field(default=(), repr=False)


def draw_fix_mask(n: int, beta: float, rng: Rng) -> FixPositionMask:
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"fix ratio beta={beta} outside [0, 1]")
    if n < 1:
        raise DomainError(f"patch count must be >= 1, got {n}")
    return FixPositionMask(n, beta, tuple(rng.sample(n, fixed_count(n, beta))))


def build_provenance(mask: FixPositionMask, B: int, mode: ShuffleMode, perms: Sequence[Sequence[int]]) -> Provenance:
    """Provenance from explicit permutations.

    ``perms`` holds one permutation for group mode, or one per relation index
    (ascending) for split mode; output sample ``s`` takes ``perm[s]``.
    """
    mode = ShuffleMode.parse(mode)
    rel = mask.relation
    expected = (1 if rel else 0) if mode is ShuffleMode.GROUP else len(rel)
    if len(perms) != expected:
        raise StructuralError(f"{mode.value} mode over {len(rel)} relation indices needs {expected} permutations, got {len(perms)}")
    source = np.repeat(np.arange(B)[:, None], mask.n, axis=1)
    if not rel:
        return Provenance(source)
    arr = np.asarray(perms, dtype=np.int64).reshape(len(perms), -1)
    if arr.shape[1] != B or not (np.sort(arr, axis=1) == np.arange(B)).all():
        raise StructuralError(f"each permutation must rearrange range({B})")
    rel_idx = np.asarray(rel)
    if mode is ShuffleMode.GROUP:
        source[:, rel_idx] = arr[0][:, None]
    else:
        source[:, rel_idx] = arr.T
    return Provenance(source)


def draw_permutations(mask: FixPositionMask, B: int, mode: ShuffleMode, rng: Rng) -> tuple[tuple[int, ...], ...]:
    rel = mask.relation
    if not rel:
        return ()
    count = 1 if ShuffleMode.parse(mode) is ShuffleMode.GROUP else len(rel)
    return tuple(tuple(rng.permutation(B)) for _ in range(count))


def apply_provenance(batch: ImageBatch, grid: PatchGrid, provenance: Provenance) -> ImageBatch:
    """Gather patches so that output patch (s, i) is input patch (source[s, i], i)."""
    if provenance.B != batch.B or provenance.n != grid.n:
        raise StructuralError(
            f"provenance {provenance.source.shape} does not match batch B={batch.B}, n={grid.n}"
        )
    _, patches = split_into_patches(batch, grid.patch_size)
    gathered = patches.array[provenance.source, np.arange(grid.n)[None, :]]
    return reassemble(grid, gathered)


def in_place_shuffle(
    batch: ImageBatch, grid: PatchGrid, mask: FixPositionMask, mode: ShuffleMode, rng: Rng
) -> tuple[ImageBatch, Provenance]:
    if mask.n != grid.n:
        raise StructuralError(f"mask covers n={mask.n} patches but grid has n={grid.n}")
    if (grid.height, grid.width) != (batch.H, batch.W):
        raise StructuralError(f"grid {grid.height}x{grid.width} does not match batch {batch.H}x{batch.W}")
    mode = ShuffleMode.parse(mode)
    perms = draw_permutations(mask, batch.B, mode, rng)
    prov = build_provenance(mask, batch.B, mode, perms)
    return apply_provenance(batch, grid, prov), prov


def soft_labels(provenance: Provenance, labels: LabelBatch) -> SoftLabelBatch:
    """Row ``s`` is the fraction of its patches donated by each class."""
    if provenance.B != labels.B:
        raise StructuralError(f"provenance has B={provenance.B} rows but labels have B={labels.B}")
    classes = labels.labels[provenance.source]
    counts = np.zeros((provenance.B, labels.cls), dtype=np.int64)
    np.add.at(counts, (np.arange(provenance.B)[:, None], classes), 1)
    return SoftLabelBatch((counts / provenance.n).astype(np.float32))


def augment_batch(
    batch: ImageBatch,
    labels: LabelBatch,
    beta: float,
    p: int,
    mode: ShuffleMode,
    trigger_prob: float,
    rng: Rng,
) -> AugmentedBatch:
    if not 0.0 <= trigger_prob <= 1.0:
        raise DomainError(f"trigger probability {trigger_prob} outside [0, 1]")
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"fix ratio beta={beta} outside [0, 1]")
    if labels.B != batch.B:
        raise StructuralError(f"batch has B={batch.B} images but {labels.B} labels")
    grid = PatchGrid(batch.H, batch.W, p)
    mode = ShuffleMode.parse(mode)
    if not rng.random() < trigger_prob:
        return AugmentedBatch(
            images=batch,
            soft_labels=SoftLabelBatch.from_labels(labels),
            provenance=Provenance.identity(batch.B, grid.n),
            mask=None,
            triggered=False,
            patch_size=p,
        )
    mask = draw_fix_mask(grid.n, beta, rng)
    perms = draw_permutations(mask, batch.B, mode, rng)
    prov = build_provenance(mask, batch.B, mode, perms)
    images = apply_provenance(batch, grid, prov)
    return AugmentedBatch(images, soft_labels(prov, labels), prov, mask, True, p, perms)
