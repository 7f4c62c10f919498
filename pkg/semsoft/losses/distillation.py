"""
Semantic knowledge distillation.

Per hierarchy i the student and teacher logits go through their own softmax
(S_i, T_i); the per-hierarchy distance L_KD_i is weighted by the teacher
confidence P_i and summed: L_KD = sum_i P_i * L_KD_i. The teacher is a constant.

Regular KD is the same distance over one softmax spanning all N classes; it is
the baseline that goes with single-label pretraining.
"""

import math
from typing import Literal, Sequence

import numpy as np

from semsoft.errors import DimensionMismatch, NotNormalized
from semsoft.losses.base import as_logits, log_softmax, stable_softmax
from semsoft.losses.semantic_softmax import check_label
from semsoft.models import LossResult, SemanticLabel, Taxonomy, TeacherOutput

TOP_FRACTION_DIVISOR = 20  # top 5% of a hierarchy's classes


def estimate_teacher_confidence(
    teacher_probs_k: Sequence[float] | np.ndarray,
    gt_max_hierarchy: int,
    k: int,
    strict: bool = False,
) -> float:
    """
    Teacher confidence P_k for hierarchy k.

    Supervised hierarchies (gt_max_hierarchy >= k, or > k when `strict`) get
    P_k = 1. Otherwise P_k is the probability mass of the ceil(N_k / 20) most
    probable classes.

    Raises:
        NotNormalized: If the probabilities do not sum to 1 within 1e-6
    """
    probs = np.asarray(teacher_probs_k, dtype=np.float64)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-6:
        raise NotNormalized(total)

    supervised = gt_max_hierarchy > k if strict else gt_max_hierarchy >= k
    if supervised:
        return 1.0

    count = math.ceil(probs.size / TOP_FRACTION_DIVISOR)
    top = np.sort(probs)[::-1][:count]
    return float(min(1.0, max(0.0, top.sum())))


def build_teacher_output(
    teacher_logits: Sequence[float] | np.ndarray,
    label: SemanticLabel,
    t: Taxonomy,
    strict: bool = False,
) -> TeacherOutput:
    """Compute P_i for every hierarchy from the teacher's logits and the label."""
    logits = as_logits(teacher_logits, expected=t.num_classes)
    check_label(label, t)
    confidences = [
        estimate_teacher_confidence(
            stable_softmax(logits[t.group_slice(k)]), label.max_hierarchy, k, strict=strict
        )
        for k in range(t.num_hierarchies)
    ]
    return TeacherOutput(logits=logits, confidences=confidences)


def _group_distance(
    student: np.ndarray,
    teacher: np.ndarray,
    normalization: Literal["mean", "sum"],
    distance: Literal["mse", "kl"],
) -> tuple[float, np.ndarray]:
    """Distance between the softmaxes of one logit group and its gradient w.r.t. `student`."""
    if distance == "kl":
        log_s = log_softmax(student)
        log_t = log_softmax(teacher)
        t = np.exp(log_t)
        return float((t * (log_t - log_s)).sum()), np.exp(log_s) - t

    s = stable_softmax(student)
    diff = s - stable_softmax(teacher)
    scale = 1.0 / diff.size if normalization == "mean" else 1.0
    g = 2.0 * scale * diff
    return float(scale * (diff**2).sum()), s * (g - (g * s).sum())


def semantic_kd_loss(
    z_s: Sequence[float] | np.ndarray,
    teacher: TeacherOutput,
    label: SemanticLabel,
    t: Taxonomy,
    weighted: bool = True,
    normalization: Literal["mean", "sum"] = "mean",
    distance: Literal["mse", "kl"] = "mse",
) -> LossResult:
    """
    Confidence-weighted semantic KD loss and its gradient w.r.t. the student logits.

    Args:
        z_s: Student logits
        teacher: Teacher logits and confidences
        label: Ground truth, validated against the taxonomy
        t: Taxonomy
        weighted: False gives the vanilla unweighted sum over hierarchies
        normalization: "mean" divides the squared differences of a group by its
            size, "sum" keeps the plain sum (MSE distance only)
        distance: "mse" on probabilities, or "kl" for KL(T || S)

    Raises:
        DimensionMismatch: If student or teacher sizes disagree with the taxonomy
    """
    student = as_logits(z_s, expected=t.num_classes)
    teacher_logits = np.asarray(teacher.logits, dtype=np.float64)
    if teacher_logits.shape != student.shape:
        raise DimensionMismatch(t.num_classes, teacher_logits.size, what="teacher logits")
    if len(teacher.confidences) != t.num_hierarchies:
        raise DimensionMismatch(t.num_hierarchies, len(teacher.confidences), what="confidences")
    check_label(label, t)

    grad = np.zeros_like(student)
    per_hierarchy = [0.0] * t.num_hierarchies
    total = 0.0
    for i in range(t.num_hierarchies):
        group = t.group_slice(i)
        weight = teacher.confidences[i] if weighted else 1.0
        loss_i, grad_i = _group_distance(
            student[group], teacher_logits[group], normalization, distance
        )
        per_hierarchy[i] = loss_i
        total += weight * loss_i
        grad[group] = weight * grad_i

    return LossResult(
        total=total,
        per_hierarchy=per_hierarchy,
        grad=grad,
        metadata={"weighted": weighted, "normalization": normalization, "distance": distance},
    )


def regular_kd_loss(
    z_s: Sequence[float] | np.ndarray,
    z_t: Sequence[float] | np.ndarray,
    normalization: Literal["mean", "sum"] = "mean",
    distance: Literal["mse", "kl"] = "mse",
) -> LossResult:
    """
    Plain KD over the full class vector: one softmax for the student, one for
    the teacher, no hierarchies and no confidence weights.

    Returns:
        LossResult with a single-entry per_hierarchy breakdown

    Raises:
        DimensionMismatch: If the teacher has a different number of logits
    """
    student = as_logits(z_s)
    teacher_logits = as_logits(z_t, expected=student.size)

    loss, grad = _group_distance(student, teacher_logits, normalization, distance)
    return LossResult(
        total=loss,
        per_hierarchy=[loss],
        grad=grad,
        metadata={"weighted": False, "normalization": normalization, "distance": distance},
    )


def combined_objective(task: LossResult, kd: LossResult, lambda_kd: float = 1.0) -> LossResult:
    """task + lambda * KD, with breakdowns and gradients added elementwise."""
    if len(task.per_hierarchy) == len(kd.per_hierarchy):
        per_hierarchy = [a + lambda_kd * b for a, b in zip(task.per_hierarchy, kd.per_hierarchy)]
    else:
        per_hierarchy = list(task.per_hierarchy)
    return LossResult(
        total=task.total + lambda_kd * kd.total,
        per_hierarchy=per_hierarchy,
        grad=task.grad + lambda_kd * kd.grad,
        metadata={**kd.metadata, "lambda_kd": lambda_kd},
    )
