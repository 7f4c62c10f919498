"""
Upstream evaluation metrics: top-k accuracy, per-hierarchy semantic accuracy
and micro/macro mAP. Ties always resolve towards the lowest index.
"""

import logging
from typing import Sequence

import numpy as np

from semsoft.errors import DimensionMismatch, InvalidTarget, NoPositives
from semsoft.losses.semantic_softmax import check_label
from semsoft.models import (
    HierarchyAccuracy,
    MapReport,
    PredictionBatch,
    SemanticAccuracyReport,
    SemanticLabel,
    Taxonomy,
)

logger = logging.getLogger(__name__)


def top_k_accuracy(batch: PredictionBatch, k: int) -> float:
    """
    Fraction of samples whose true class is among the k highest logits.

    A class with the same logit as the true class ranks ahead of it when its
    index is lower.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    logits = batch.logits
    num_samples, num_classes = logits.shape
    if num_samples == 0:
        return 0.0

    targets = np.asarray(batch.labels, dtype=np.int64)
    if targets.ndim != 1:
        raise DimensionMismatch(num_samples, targets.size, what="single-label targets")
    if np.any((targets < 0) | (targets >= num_classes)):
        bad = int(targets[(targets < 0) | (targets >= num_classes)][0])
        raise InvalidTarget(bad, num_classes)

    true_scores = logits[np.arange(num_samples), targets][:, None]
    lower_index = np.arange(num_classes)[None, :] < targets[:, None]
    ahead = (logits > true_scores) | ((logits == true_scores) & lower_index)
    rank = ahead.sum(axis=1)
    return float(np.mean(rank < k))


def semantic_accuracy(batch: PredictionBatch, t: Taxonomy) -> SemanticAccuracyReport:
    """
    Per-hierarchy top-1 accuracy over the samples whose label reaches that hierarchy.

    The weighted total combines the hierarchies that have support, each weighted
    by its class count N_k.

    Raises:
        InconsistentLabel: If a label does not fit the taxonomy
    """
    if batch.logits.shape[1] != t.num_classes:
        raise DimensionMismatch(t.num_classes, batch.logits.shape[1])

    labels: list[SemanticLabel] = batch.labels
    for label in labels:
        check_label(label, t)

    sizes = t.sizes
    per_hierarchy: list[HierarchyAccuracy] = []
    for k in range(t.num_hierarchies):
        rows = [i for i, label in enumerate(labels) if label.is_active(k)]
        if not rows:
            per_hierarchy.append(HierarchyAccuracy(accuracy=0.0, support=0))
            continue
        predicted = batch.logits[rows, t.group_slice(k)].argmax(axis=1)
        truth = np.array([labels[i].per_hierarchy[k] for i in rows])
        per_hierarchy.append(
            HierarchyAccuracy(accuracy=float(np.mean(predicted == truth)), support=len(rows))
        )

    mass = sum(sizes[k] for k, h in enumerate(per_hierarchy) if h.support > 0)
    weighted = sum(sizes[k] * h.accuracy for k, h in enumerate(per_hierarchy) if h.support > 0)
    return SemanticAccuracyReport(
        per_hierarchy_top1=per_hierarchy,
        weighted_total=weighted / mass if mass else 0.0,
    )


def average_precision(
    scores: Sequence[float] | np.ndarray, relevance: Sequence[float] | np.ndarray
) -> float:
    """
    All-points average precision.

    Items are ranked by descending score (ties by lowest index) and the
    precision at the rank of every positive is averaged.

    Raises:
        DimensionMismatch: If the lengths differ
        NoPositives: If no item is relevant
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    r = np.asarray(relevance).ravel().astype(bool)
    if s.size != r.size:
        raise DimensionMismatch(s.size, r.size, what="relevance")
    num_positives = int(r.sum())
    if num_positives == 0:
        raise NoPositives()

    order = np.argsort(-s, kind="stable")
    hits = r[order]
    ranks = np.nonzero(hits)[0] + 1
    precision_at_hits = np.arange(1, num_positives + 1) / ranks
    return float(precision_at_hits.sum() / num_positives)


def map_scores(batch: PredictionBatch) -> MapReport:
    """
    Micro and macro mAP of a multi-label batch.

    Macro averages per-class AP over the classes with at least one positive;
    micro is the AP of all (sample, class) pairs flattened row-major.
    """
    scores = batch.logits
    targets = np.asarray(batch.labels, dtype=np.float64)
    if targets.shape != scores.shape:
        raise DimensionMismatch(scores.size, targets.size, what="binary targets")

    per_class = []
    skipped = 0
    for c in range(scores.shape[1]):
        if targets[:, c].any():
            per_class.append(average_precision(scores[:, c], targets[:, c]))
        else:
            skipped += 1
    if skipped:
        logger.debug(f"Skipped {skipped} classes without positives in macro mAP")
    if not per_class:
        raise NoPositives()

    return MapReport(
        micro_map=average_precision(scores.ravel(), targets.ravel()),
        macro_map=float(np.mean(per_class)),
    )
