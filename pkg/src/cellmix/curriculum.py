"""Patch-size and fix-ratio schedules driven by a shared difficulty index.

Index ``k = 0`` is the easiest lesson (largest patches, most fixed
positions). Each schedule reads ``min(k, len - 1)`` so lists of unequal
length clamp independently at their hard end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import DomainError
from .rng import Rng

DEFAULT_PATCH_SIZES = (192, 128, 96, 64, 48, 32, 16)
DEFAULT_FIX_RATIOS = (0.9, 0.8, 0.7, 0.6, 0.5)
DEFAULT_THRESHOLD = 4.0
MIN_PATCH_SIZE = 16


@dataclass(frozen=True)
class PatchSizeSchedule:
    sizes: tuple[int, ...] = DEFAULT_PATCH_SIZES

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise DomainError("patch-size schedule is empty")
        if any(a <= b for a, b in zip(sizes, sizes[1:])):
            raise DomainError(f"patch sizes must be strictly descending, got {list(sizes)}")
        if sizes[-1] < MIN_PATCH_SIZE:
            raise DomainError(f"smallest patch size must be >= {MIN_PATCH_SIZE}, got {sizes[-1]}")
        object.__setattr__(self, "sizes", sizes)

    def check_side(self, side: int) -> None:
        bad = [s for s in self.sizes if side % s]
        if bad:
            raise DomainError(f"patch sizes {bad} do not divide image side {side}")

    def __len__(self):
        return len(self.sizes)


@dataclass(frozen=True)
class FixRatioSchedule:
    ratios: tuple[float, ...] = DEFAULT_FIX_RATIOS

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        if not ratios:
            raise DomainError("fix-ratio schedule is empty")
        if any(not 0.0 < r <= 1.0 for r in ratios):
            raise DomainError(f"fix ratios must lie in (0, 1], got {list(ratios)}")
        if any(a <= b for a, b in zip(ratios, ratios[1:])):
            raise DomainError(f"fix ratios must be strictly descending, got {list(ratios)}")
        object.__setattr__(self, "ratios", ratios)

    def __len__(self):
        return len(self.ratios)


@dataclass(frozen=True)
class Policy:
    """Scheduler policy.

    ``kind`` is one of :data:`POLICY_KINDS`; ``value`` carries the pinned
    patch size or ratio for ``fixed-patch`` / ``fixed-ratio``.
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise DomainError(f"unknown policy {self.kind!r}; expected one of {sorted(POLICY_KINDS)}")
        pinned = self.kind in ("fixed-patch", "fixed-ratio")
        if pinned != (self.value is not None):
            raise DomainError(f"policy {self.kind!r} {'needs' if pinned else 'takes no'} a pinned value")
        if self.kind == "fixed-patch" and (self.value != int(self.value) or self.value < MIN_PATCH_SIZE):
            raise DomainError(f"pinned patch size must be an integer >= {MIN_PATCH_SIZE}, got {self.value}")
        if self.kind == "fixed-ratio" and not 0.0 < self.value <= 1.0:
            raise DomainError(f"pinned fix ratio must lie in (0, 1], got {self.value}")

    @classmethod
    def parse(cls, text) -> "Policy":
        """Parse ``hold``, ``back``, ``loop``, ``fixed-patch:48``, ``fixed-ratio:0.7`` and so on."""
        if isinstance(text, cls):
            return text
        name, sep, arg = str(text).strip().lower().partition(":")
        name = POLICY_ALIASES.get(name, name)
        if not sep:
            return cls(name)
        try:
            value = int(arg) if name == "fixed-patch" else float(arg)
        except ValueError:
            raise DomainError(f"bad pinned value in policy {text!r}") from None
        return cls(name, value)

    def __str__(self):
        if self.value is None:
            return self.kind
        return f"{self.kind}:{int(self.value) if self.kind == 'fixed-patch' else self.value:g}"

    @property
    def loss_driven(self) -> bool:
        return self.kind in LOSS_DRIVEN


LOSS_DRIVEN = frozenset({"hold", "back", "fixed-patch", "fixed-ratio"})
VARIANTS = frozenset({"linear", "reverse", "random", "loop", "linear-decay"})
POLICY_KINDS = LOSS_DRIVEN | VARIANTS
POLICY_ALIASES = {
    "loss-hold": "hold",
    "lossdrivehold": "hold",
    "loss-back": "back",
    "lossdriveback": "back",
    "lineardecayratio": "linear-decay",
    "linear-decay-ratio": "linear-decay",
    "fixedpatch": "fixed-patch",
    "fixedratio": "fixed-ratio",
}


@dataclass(frozen=True)
class CurriculumState:
    """Controller state.

    ``horizon`` is the run length used by ``linear``/``reverse`` to spread the
    walk over the run; without it they move one lesson per step. ``ema`` is an
    optional smoothing coefficient for the loss fed to the threshold test.
    """

    policy: Policy = Policy("hold")
    k: int = 0
    threshold: float = DEFAULT_THRESHOLD
    sizes: PatchSizeSchedule = PatchSizeSchedule()
    ratios: FixRatioSchedule = FixRatioSchedule()
    rng: Rng | None = None
    horizon: int | None = None
    ema: float | None = None
    smoothed_loss: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        if not 0 <= self.k <= self.k_max:
            raise DomainError(f"difficulty index k={self.k} outside [0, {self.k_max}]")
        if not math.isfinite(self.threshold):
            raise DomainError(f"threshold must be finite, got {self.threshold}")
        if self.ema is not None and not 0.0 <= self.ema < 1.0:
            raise DomainError(f"EMA coefficient must lie in [0, 1), got {self.ema}")
        if self.horizon is not None and self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        if self.policy.kind == "random" and self.rng is None:
            raise DomainError("random policy needs an rng")

    @property
    def k_max(self) -> int:
        return max(len(self.sizes), len(self.ratios)) - 1


def current(state: CurriculumState) -> tuple[int, float]:
    """``(patch_size, fix_ratio)`` for the state's lesson."""
    sizes, ratios = state.sizes.sizes, state.ratios.ratios
    p = sizes[min(state.k, len(sizes) - 1)]
    f = ratios[min(state.k, len(ratios) - 1)]
    if state.policy.kind == "fixed-patch":
        p = int(state.policy.value)
    elif state.policy.kind == "fixed-ratio":
        f = float(state.policy.value)
    return p, f


def loss_drive_step(state: CurriculumState, loss: float) -> CurriculumState:
    """Advance below threshold; otherwise hold, or step back under ``back``.

    Pinned policies (``fixed-patch``, ``fixed-ratio``) drive their free axis
    with the hold rule.
    """
    if not state.policy.loss_driven:
        raise DomainError(f"policy {state.policy} is not loss-driven")
    loss = float(loss)
    if not math.isfinite(loss):
        raise DomainError(f"loss must be finite, got {loss}")
    smoothed = loss
    if state.ema is not None and state.smoothed_loss is not None:
        smoothed = state.ema * state.smoothed_loss + (1.0 - state.ema) * loss
    if smoothed < state.threshold:
        k = min(state.k + 1, state.k_max)
    elif state.policy.kind == "back":
        k = max(state.k - 1, 0)
    else:
        k = state.k
    return replace(state, k=k, smoothed_loss=smoothed if state.ema is not None else None)


def variant_step(state: CurriculumState, t: int) -> CurriculumState:
    """Loss-independent lesson for iteration ``t`` (0-based)."""
    kind = state.policy.kind
    top = state.k_max
    if t < 0:
        raise DomainError(f"iteration index must be >= 0, got {t}")
    if kind == "loop":
        k = t % (top + 1)
    elif kind == "random":
        k = state.rng.below(top + 1)
    elif kind == "linear-decay":
        k = min(t, top)
    elif kind in ("reverse", "linear"):
        if state.horizon is None:
            walked = min(t, top)
        else:
            walked = min(top, t * (top + 1) // state.horizon)
        k = walked if kind == "reverse" else top - walked
    else:
        raise DomainError(f"policy {state.policy} is loss-driven; use loss_drive_step")
    return replace(state, k=k)


def initial_k(policy: Policy, k_max: int) -> int:
    """Starting lesson: ``linear`` starts at the smallest patch, everything else at 0."""
    return k_max if Policy.parse(policy).kind == "linear" else 0


def step(state: CurriculumState, t: int, loss: float | None = None) -> CurriculumState:
    """Update after iteration ``t``; the result holds the lesson for iteration ``t + 1``."""
    if state.policy.loss_driven:
        if loss is None:
            raise DomainError(f"policy {state.policy} needs a loss")
        return loss_drive_step(state, loss)
    return variant_step(state, t + 1)


TRACE_HEADER = "step,loss,k,patch_size,fix_ratio,policy"


def format_loss(loss: float | None) -> str:
    return "" if loss is None else repr(float(loss))


def trace_line(t: int, loss: float | None, state: CurriculumState) -> str:
    p, f = current(state)
    return f"{t},{format_loss(loss)},{state.k},{p},{f!r},{state.policy}"


def make_state(
    policy="hold",
    threshold: float = DEFAULT_THRESHOLD,
    sizes: Sequence[int] = DEFAULT_PATCH_SIZES,
    ratios: Sequence[float] = DEFAULT_FIX_RATIOS,
    rng: Rng | None = None,
    horizon: int | None = None,
    ema: float | None = None,
) -> CurriculumState:
    policy = Policy.parse(policy)
    ps, fs = PatchSizeSchedule(tuple(sizes)), FixRatioSchedule(tuple(ratios))
    k0 = initial_k(policy, max(len(ps), len(fs)) - 1)
    return CurriculumState(policy, k0, threshold, ps, fs, rng, horizon, ema)
