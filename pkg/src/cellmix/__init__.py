"""Batch image augmentation by in-place patch shuffling with a loss-driven curriculum."""

from .baselines import RectRegion, cutmix, cutout, mixup
from .curriculum import (
    CurriculumState,
    FixRatioSchedule,
    PatchSizeSchedule,
    Policy,
    current,
    loss_drive_step,
    make_state,
    variant_step,
)
from .errors import CellMixError, ConfigError, DomainError, FormatError, StructuralError
from .rng import Rng
from .shuffle import (
    AugmentedBatch,
    FixPositionMask,
    Provenance,
    ShuffleMode,
    augment_batch,
    draw_fix_mask,
    in_place_shuffle,
    soft_labels,
)
from .sim import LossTrace, RunReport, SyntheticLearner, corrupt_labels, run_controller, simulate_training
from .tensor import ImageBatch, LabelBatch, PatchGrid, SoftLabelBatch, reassemble, split_into_patches

__version__ = "0.1.0"
