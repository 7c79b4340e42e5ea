"""Controller harness: replay loss traces or a synthetic learner, no network involved.

Each record holds the loss observed at step ``t`` and the lesson (``k``,
patch size, fix ratio) the controller selected after seeing it, which is
the lesson in force for step ``t + 1``. ``triggered`` refers to the
augmentation run during step ``t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import curriculum
from .curriculum import CurriculumState, Policy, current, make_state
from .errors import DomainError
from .rng import Rng
from .shuffle import ShuffleMode, augment_batch, fixed_count
from .synthetic import generate_batch
from .tensor import LabelBatch


@dataclass(frozen=True)
class LossTrace:
    losses: tuple[float, ...]

    def __post_init__(self):
        losses = tuple(float(v) for v in self.losses)
        if not losses:
            raise DomainError("loss trace is empty")
        bad = [i for i, v in enumerate(losses) if not math.isfinite(v) or v < 0]
        if bad:
            raise DomainError(f"loss trace has non-finite or negative values at steps {bad[:5]}")
        object.__setattr__(self, "losses", losses)

    def __len__(self):
        return len(self.losses)

    def __iter__(self):
        return iter(self.losses)


@dataclass
class SyntheticLearner:
    """Loss ``a * exp(-t / tau)`` plus clamped Gaussian noise of scale ``sigma``."""

    a: float = 8.0
    tau: float = 10.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.a > 0 or not self.tau > 0 or not self.sigma >= 0:
            raise DomainError(f"need a > 0, tau > 0, sigma >= 0; got a={self.a}, tau={self.tau}, sigma={self.sigma}")

    def mean_loss(self, t: int) -> float:
        return self.a * math.exp(-t / self.tau)

    def loss(self, t: int, rng: Rng) -> float:
        value = self.mean_loss(t)
        if self.sigma:
            value += self.sigma * rng.normal()
        return max(value, 0.0)


@dataclass
class AugConfig:
    batch_size: int = 8
    channels: int = 3
    side: int = 384
    classes: int = 2
    mode: str = "group"
    trigger_prob: float = 0.5


@dataclass(frozen=True)
class StepRecord:
    step: int
    loss: float | None
    k: int
    patch_size: int
    fix_ratio: float
    triggered: bool = False
    m: int | None = None


@dataclass
class RunReport:
    policy: str
    threshold: float
    records: list[StepRecord] = field(default_factory=list)
    final_k: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def k_sequence(self) -> list[int]:
        return [r.k for r in self.records]

    @property
    def losses(self) -> list[float | None]:
        return [r.loss for r in self.records]

    def summary(self) -> dict:
        steps_at = {}
        for r in self.records:
            steps_at[str(r.k)] = steps_at.get(str(r.k), 0) + 1
        last = self.records[-1]
        return {
            "policy": self.policy,
            "threshold": self.threshold,
            "steps": len(self.records),
            "steps_at_k": dict(sorted(steps_at.items(), key=lambda kv: int(kv[0]))),
            "triggered_steps": sum(r.triggered for r in self.records),
            "final": {"k": last.k, "patch_size": last.patch_size, "fix_ratio": last.fix_ratio},
        }

    def to_csv(self) -> str:
        lines = [curriculum.TRACE_HEADER]
        for r in self.records:
            lines.append(
                f"{r.step},{curriculum.format_loss(r.loss)},{r.k},{r.patch_size},{r.fix_ratio!r},{self.policy}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _record(t: int, loss, state: CurriculumState, triggered=False, m=None) -> StepRecord:
    p, f = current(state)
    return StepRecord(t, loss, state.k, p, f, triggered, m)


def run_controller(
    trace: LossTrace | Sequence[float],
    policy="hold",
    threshold: float = curriculum.DEFAULT_THRESHOLD,
    sizes: Sequence[int] = curriculum.DEFAULT_PATCH_SIZES,
    ratios: Sequence[float] = curriculum.DEFAULT_FIX_RATIOS,
    seed: int = 0,
    horizon: int | None = None,
    ema: float | None = None,
) -> RunReport:
    """Replay a loss trace through the controller, one update per element."""
    trace = trace if isinstance(trace, LossTrace) else LossTrace(tuple(trace))
    policy = Policy.parse(policy)
    rng = Rng(seed) if policy.kind == "random" else None
    state = make_state(policy, threshold, sizes, ratios, rng, horizon or len(trace), ema)
    report = RunReport(str(policy), float(threshold))
    for t, loss in enumerate(trace):
        state = curriculum.step(state, t, loss)
        report.records.append(_record(t, loss, state))
    report.final_k = state.k
    return report


def simulate_training(
    learner: SyntheticLearner,
    policy="hold",
    threshold: float = curriculum.DEFAULT_THRESHOLD,
    steps: int = 100,
    aug: AugConfig | None = None,
    seed: int = 0,
    sizes: Sequence[int] = curriculum.DEFAULT_PATCH_SIZES,
    ratios: Sequence[float] = curriculum.DEFAULT_FIX_RATIOS,
    ema: float | None = None,
) -> RunReport:
    """Drive the controller with a synthetic learner.

    With ``aug`` set, one generated batch is augmented at the current lesson
    on every step. Streams for noise, policy, data and augmentation are
    spawned from ``seed`` in that order.
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    master = Rng(seed)
    noise_rng, policy_rng, data_rng, aug_rng = (master.spawn() for _ in range(4))
    state = make_state(policy, threshold, sizes, ratios, policy_rng, steps, ema)
    if aug is not None:
        state.sizes.check_side(aug.side)
        if state.policy.kind == "fixed-patch" and aug.side % int(state.policy.value):
            raise DomainError(f"pinned patch size {state.policy.value} does not divide side {aug.side}")
        batch, labels = generate_batch(aug.batch_size, aug.channels, aug.side, aug.classes, data_rng)
        mode = ShuffleMode.parse(aug.mode)
    report = RunReport(str(state.policy), float(threshold))
    for t in range(steps):
        triggered, m = False, None
        if aug is not None:
            p, f = current(state)
            out = augment_batch(batch, labels, f, p, mode, aug.trigger_prob, aug_rng)
            triggered = out.triggered
            m = out.mask.m if out.mask is not None else None
        loss = learner.loss(t, noise_rng)
        state = curriculum.step(state, t, loss)
        report.records.append(_record(t, loss, state, triggered, m))
    report.final_k = state.k
    return report


def corrupt_labels(labels: LabelBatch, ratio: float, rng: Rng) -> LabelBatch:
    """Resample ``round(B * ratio)`` labels uniformly; a draw may repeat the original class."""
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"corruption ratio {ratio} outside [0, 1]")
    out = np.array(labels.labels, dtype=np.int64)
    for idx in rng.sample(labels.B, fixed_count(labels.B, ratio)):
        out[idx] = rng.below(labels.cls)
    return LabelBatch(out, labels.cls)
