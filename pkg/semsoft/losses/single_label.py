"""
Single-label scheme: one softmax over every class with label smoothing.
"""

from typing import Sequence

import numpy as np

from semsoft.losses.base import as_logits, smoothed_cross_entropy
from semsoft.models import LossResult


def single_label_ce(
    z: Sequence[float] | np.ndarray, target: int, smoothing: float = 0.2
) -> LossResult:
    """
    Label-smoothed softmax cross-entropy over all N classes.

    Args:
        z: Logits, one per class
        target: Index of the true class
        smoothing: Label-smoothing factor eps in [0, 1)

    Returns:
        LossResult with a single-entry per_hierarchy breakdown and grad = p - t

    Raises:
        InvalidTarget: If target is not in [0, N)
    """
    logits = as_logits(z)
    loss, grad = smoothed_cross_entropy(logits, target, smoothing)
    return LossResult(total=loss, per_hierarchy=[loss], grad=grad)
