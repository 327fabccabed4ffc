"""Mask-ratio and class-threshold controllers for self-training loops."""

from ._core import (
    MaskScheduler,
    TeachctlError,
    VfstController,
    class_stats,
    smoothing_coefficient,
    step_size,
    update_threshold,
)

__all__ = [
    "MaskScheduler",
    "TeachctlError",
    "VfstController",
    "class_stats",
    "smoothing_coefficient",
    "step_size",
    "update_threshold",
]
