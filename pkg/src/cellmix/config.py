"""Flat JSON run configuration; unknown keys are rejected."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .curriculum import (
    DEFAULT_FIX_RATIOS,
    DEFAULT_PATCH_SIZES,
    DEFAULT_THRESHOLD,
    FixRatioSchedule,
    PatchSizeSchedule,
    Policy,
)
from .errors import ConfigError, DomainError
from .shuffle import ShuffleMode


@dataclass
class RunConfig:
    fix_ratios: list[float] = field(default_factory=lambda: list(DEFAULT_FIX_RATIOS))
    patch_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_PATCH_SIZES))
    policy: str = "hold"
    threshold: float = DEFAULT_THRESHOLD
    trigger_prob: float = 0.5
    mode: str = "group"
    seed: int | None = None
    batch_size: int = 8
    image_side: int = 384
    loss_ema: float | None = None

    def validate(self) -> "RunConfig":
        PatchSizeSchedule(tuple(self.patch_sizes))
        FixRatioSchedule(tuple(self.fix_ratios))
        Policy.parse(self.policy)
        ShuffleMode.parse(self.mode)
        if self.image_side < 1:
            raise DomainError(f"image_side must be >= 1, got {self.image_side}")
        if not 0.0 <= self.trigger_prob <= 1.0:
            raise DomainError(f"trigger_prob {self.trigger_prob} outside [0, 1]")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.loss_ema is not None and not 0.0 <= self.loss_ema < 1.0:
            raise DomainError(f"loss_ema must lie in [0, 1), got {self.loss_ema}")
        return self

    def check_side(self, side: int | None = None) -> None:
        """Every scheduled (or pinned) patch size must divide ``side``."""
        side = self.image_side if side is None else side
        PatchSizeSchedule(tuple(self.patch_sizes)).check_side(side)
        policy = Policy.parse(self.policy)
        if policy.kind == "fixed-patch" and side % int(policy.value):
            raise DomainError(f"pinned patch size {int(policy.value)} does not divide image side {side}")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in raw.items():
            if isinstance(value, dict):
                raise ConfigError(f"config is flat; key {key!r} holds an object")
        try:
            return cls(**raw).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(raw)

    def override(self, **kwargs) -> "RunConfig":
        """Copy with every non-None keyword applied."""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        return dataclasses.replace(self, **changes).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
