"""
Central finite-difference verification of analytic gradients.
"""

import logging
from typing import Callable

import numpy as np

from semsoft.losses.distillation import build_teacher_output, regular_kd_loss, semantic_kd_loss
from semsoft.losses.multi_label import multi_label_binary_loss
from semsoft.losses.semantic_softmax import semantic_softmax_loss
from semsoft.losses.single_label import single_label_ce
from semsoft.losses.weights import compute_hierarchy_weights
from semsoft.models import BinaryLossConfig, LossResult
from semsoft.synthetic import random_taxonomy
from semsoft.taxonomy import expand_label, multi_hot

logger = logging.getLogger(__name__)

LossFn = Callable[[np.ndarray], "LossResult | tuple[float, np.ndarray]"]

# denominator floor used for random draws
SUITE_ABS_FLOOR = 1e-4


def _evaluate(loss_fn: LossFn, x: np.ndarray) -> tuple[float, np.ndarray]:
    result = loss_fn(x)
    if isinstance(result, LossResult):
        return result.total, np.asarray(result.grad, dtype=np.float64)
    value, grad = result
    return float(value), np.asarray(grad, dtype=np.float64)


def finite_difference_check(
    loss_fn: LossFn, instance: np.ndarray, h: float = 1e-5, abs_floor: float = 1e-8
) -> float:
    """
    Max relative error between the analytic gradient and central differences.

    Args:
        loss_fn: Maps a point to a LossResult or a (value, gradient) pair
        instance: Point to check at
        h: Step size
        abs_floor: Lower bound of the denominator |numeric|

    Returns:
        max_i |analytic_i - numeric_i| / max(abs_floor, |numeric_i|)
    """
    x = np.array(instance, dtype=np.float64)
    _, analytic = _evaluate(loss_fn, x)
    numeric = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        original = x[i]
        x[i] = original + h
        plus, _ = _evaluate(loss_fn, x)
        x[i] = original - h
        minus, _ = _evaluate(loss_fn, x)
        x[i] = original
        numeric[i] = (plus - minus) / (2.0 * h)
    errors = np.abs(analytic - numeric) / np.maximum(abs_floor, np.abs(numeric))
    return float(errors.max()) if errors.size else 0.0


def run_gradient_suite(instances: int = 100, seed: int = 0) -> dict[str, float]:
    """
    Check every loss on `instances` random (taxonomy, logits, label) draws.

    Returns:
        Worst relative error per loss name
    """
    rng = np.random.default_rng(seed)
    binary_configs = {
        "multi_label[ce]": BinaryLossConfig.cross_entropy(),
        "multi_label[focal]": BinaryLossConfig.focal(),
        "multi_label[asl]": BinaryLossConfig.asl(),
    }
    worst: dict[str, float] = {
        "single_label": 0.0,
        **{name: 0.0 for name in binary_configs},
        "semantic_softmax": 0.0,
        "semantic_kd[mse]": 0.0,
        "semantic_kd[kl]": 0.0,
        "regular_kd[mse]": 0.0,
        "regular_kd[kl]": 0.0,
    }

    def record(name: str, error: float) -> None:
        worst[name] = max(worst[name], error)

    for _ in range(instances):
        t = random_taxonomy(rng, int(rng.integers(2, 16)), max_depth=3)
        z = rng.normal(scale=2.0, size=t.num_classes)
        class_id = t.classes[int(rng.integers(t.num_classes))].class_id
        label = expand_label(t, class_id)
        target = multi_hot(t, class_id)
        weights = compute_hierarchy_weights(t, mode="class_mass")
        teacher = build_teacher_output(rng.normal(scale=2.0, size=t.num_classes), label, t)

        record(
            "single_label",
            finite_difference_check(
                lambda x: single_label_ce(x, t.global_index(class_id)), z, abs_floor=SUITE_ABS_FLOOR
            ),
        )
        for name, cfg in binary_configs.items():
            record(
                name,
                finite_difference_check(
                    lambda x, cfg=cfg: multi_label_binary_loss(x, target, cfg),
                    z,
                    abs_floor=SUITE_ABS_FLOOR,
                ),
            )
        record(
            "semantic_softmax",
            finite_difference_check(
                lambda x: semantic_softmax_loss(x, label, weights, t), z, abs_floor=SUITE_ABS_FLOOR
            ),
        )
        for distance in ("mse", "kl"):
            record(
                f"semantic_kd[{distance}]",
                finite_difference_check(
                    lambda x, d=distance: semantic_kd_loss(x, teacher, label, t, distance=d),
                    z,
                    abs_floor=SUITE_ABS_FLOOR,
                ),
            )
            record(
                f"regular_kd[{distance}]",
                finite_difference_check(
                    lambda x, d=distance: regular_kd_loss(x, teacher.logits, distance=d),
                    z,
                    abs_floor=SUITE_ABS_FLOOR,
                ),
            )

    for name, error in worst.items():
        logger.info(f"{name}: max relative error {error:.3e}")
    return worst
