"""
Multi-label scheme: every class is an independent binary task with an
asymmetric focal binary loss.

Positive term:  (1 - p)^gamma_pos * -log(p)
Negative term:  p^gamma_neg * -log(1 - p)

gamma_pos = gamma_neg = 0 is binary cross-entropy, 2/2 is focal loss and
gamma_pos = 0, gamma_neg = 4 is ASL.
"""

from typing import Optional, Sequence

import numpy as np

from semsoft.errors import DimensionMismatch
from semsoft.losses.base import as_logits
from semsoft.models import BinaryLossConfig, LossResult, Taxonomy


def multi_label_binary_loss(
    z: Sequence[float] | np.ndarray,
    targets: Sequence[float] | np.ndarray,
    cfg: Optional[BinaryLossConfig] = None,
    t: Optional[Taxonomy] = None,
) -> LossResult:
    """
    Sum of asymmetric focal binary losses over all logits.

    Args:
        z: Logits z_n
        targets: Binary targets y_n, same length as z
        cfg: Focusing exponents (defaults to ASL: gamma_pos=0, gamma_neg=4)
        t: Optional taxonomy; when given the per_hierarchy breakdown sums each
            hierarchy's terms, otherwise it has a single entry

    Raises:
        DimensionMismatch: If len(targets) != len(z)
    """
    cfg = cfg or BinaryLossConfig()
    logits = as_logits(z)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise DimensionMismatch(logits.size, y.size, what="targets")

    p = 1.0 / (1.0 + np.exp(-logits))
    q = 1.0 - p
    # -log(p) and -log(1 - p) without cancellation
    neg_log_p = np.logaddexp(0.0, -logits)
    neg_log_q = np.logaddexp(0.0, logits)

    focus_pos = q ** cfg.gamma_pos
    focus_neg = p ** cfg.gamma_neg
    terms = y * focus_pos * neg_log_p + (1.0 - y) * focus_neg * neg_log_q

    grad_pos = -focus_pos * (cfg.gamma_pos * p * neg_log_p + q)
    grad_neg = focus_neg * (cfg.gamma_neg * q * neg_log_q + p)
    grad = y * grad_pos + (1.0 - y) * grad_neg

    if t is not None:
        if logits.size != t.num_classes:
            raise DimensionMismatch(t.num_classes, logits.size)
        per_hierarchy = [float(terms[t.group_slice(k)].sum()) for k in range(t.num_hierarchies)]
    else:
        per_hierarchy = [float(terms.sum())]

    return LossResult(
        total=float(terms.sum()),
        per_hierarchy=per_hierarchy,
        grad=grad,
        metadata={"gamma_pos": cfg.gamma_pos, "gamma_neg": cfg.gamma_neg},
    )
