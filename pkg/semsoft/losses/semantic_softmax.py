"""
Semantic softmax scheme: one softmax per hierarchy, only the hierarchies the
label reaches are active, aggregated as sum_k W_k * L_k.
"""

from typing import Sequence

import numpy as np

from semsoft.errors import InconsistentLabel
from semsoft.losses.base import as_logits, smoothed_cross_entropy
from semsoft.models import HierarchyWeights, LossResult, SemanticLabel, Taxonomy


def check_label(label: SemanticLabel, t: Taxonomy) -> None:
    """Raise InconsistentLabel unless `label` indexes valid classes of `t`."""
    if len(label.per_hierarchy) != t.num_hierarchies:
        raise InconsistentLabel(
            f"label has {len(label.per_hierarchy)} hierarchies, taxonomy has {t.num_hierarchies}"
        )
    sizes = t.sizes
    for k, index in enumerate(label.per_hierarchy):
        if index is not None and not 0 <= index < sizes[k]:
            raise InconsistentLabel(f"index {index} out of range for hierarchy {k} (N={sizes[k]})")


def semantic_softmax_loss(
    z: Sequence[float] | np.ndarray,
    label: SemanticLabel,
    w: HierarchyWeights,
    t: Taxonomy,
    smoothing: float = 0.2,
) -> LossResult:
    """
    Balanced semantic softmax loss.

    For every active hierarchy k, L_k is the label-smoothed cross-entropy of the
    softmax over hierarchy k's logits; inactive hierarchies contribute zero loss
    and exactly zero gradient.

    Args:
        z: Logits laid out by t.logit_index
        label: Semantic label from expand_label
        w: Hierarchy weights
        t: Taxonomy
        smoothing: Label smoothing applied inside each active softmax

    Raises:
        InconsistentLabel: If the label does not fit the taxonomy
        DimensionMismatch: If len(z) != total class count
    """
    logits = as_logits(z, expected=t.num_classes)
    check_label(label, t)
    if len(w.W) != t.num_hierarchies:
        raise InconsistentLabel(f"{len(w.W)} weights for {t.num_hierarchies} hierarchies")

    grad = np.zeros_like(logits)
    per_hierarchy = [0.0] * t.num_hierarchies
    total = 0.0
    for k in range(label.max_hierarchy + 1):
        group = t.group_slice(k)
        loss_k, grad_k = smoothed_cross_entropy(logits[group], label.per_hierarchy[k], smoothing)
        per_hierarchy[k] = loss_k
        total += w.W[k] * loss_k
        grad[group] = w.W[k] * grad_k

    return LossResult(total=total, per_hierarchy=per_hierarchy, grad=grad)
