"""
Pretraining losses: single-label, multi-label, semantic softmax, semantic and regular KD.
"""

from semsoft.losses.base import split_logits, stable_softmax
from semsoft.losses.distillation import (
    build_teacher_output,
    combined_objective,
    estimate_teacher_confidence,
    regular_kd_loss,
    semantic_kd_loss,
)
from semsoft.losses.multi_label import multi_label_binary_loss
from semsoft.losses.semantic_softmax import semantic_softmax_loss
from semsoft.losses.single_label import single_label_ce
from semsoft.losses.weights import compute_hierarchy_weights

__all__ = [
    "build_teacher_output",
    "combined_objective",
    "compute_hierarchy_weights",
    "estimate_teacher_confidence",
    "multi_label_binary_loss",
    "regular_kd_loss",
    "semantic_kd_loss",
    "semantic_softmax_loss",
    "single_label_ce",
    "split_logits",
    "stable_softmax",
]
