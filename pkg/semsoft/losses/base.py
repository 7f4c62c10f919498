"""
Shared numerics for the loss schemes: stable softmax, logit splitting and
label-smoothed cross-entropy.
"""

from typing import Sequence

import numpy as np

from semsoft.errors import DimensionMismatch, EmptyInput, InvalidTarget
from semsoft.models import Taxonomy


def as_logits(values: Sequence[float] | np.ndarray, expected: int | None = None) -> np.ndarray:
    """Validate a logit vector and return it as a float64 array."""
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"logits must be one-dimensional, got shape {z.shape}")
    if z.size == 0:
        raise EmptyInput("logits")
    if expected is not None and z.size != expected:
        raise DimensionMismatch(expected, z.size)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    return z


def log_softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    return shifted - np.log(np.exp(shifted).sum())


def stable_softmax(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """
    Softmax with the maximum subtracted before exponentiation.

    Raises:
        EmptyInput: If `values` is empty
    """
    z = np.asarray(values, dtype=np.float64)
    if z.size == 0:
        raise EmptyInput("softmax input")
    exp = np.exp(z - z.max())
    return exp / exp.sum()


def split_logits(z: Sequence[float] | np.ndarray, t: Taxonomy) -> list[np.ndarray]:
    """
    Split a logit vector into its K per-hierarchy groups.

    Group k has N_k entries in within-hierarchy order; the groups are views of
    `z` when `z` is already a float64 array.

    Raises:
        DimensionMismatch: If len(z) != total class count
    """
    values = np.asarray(z, dtype=np.float64)
    if values.shape[-1] != t.num_classes:
        raise DimensionMismatch(t.num_classes, values.shape[-1])
    return [values[..., t.group_slice(k)] for k in range(t.num_hierarchies)]


def smoothed_cross_entropy(
    group: np.ndarray, target: int, smoothing: float
) -> tuple[float, np.ndarray]:
    """
    Cross-entropy of softmax(group) against (1 - eps) * onehot + eps / N.

    Returns:
        (loss, gradient p - t with respect to `group`)
    """
    n = group.size
    if not 0 <= target < n:
        raise InvalidTarget(target, n)
    if not 0.0 <= smoothing < 1.0:
        raise ValueError(f"smoothing must lie in [0, 1), got {smoothing}")

    t = np.full(n, smoothing / n)
    t[target] += 1.0 - smoothing
    log_p = log_softmax(group)
    loss = float(-(t * log_p).sum())
    return loss, np.exp(log_p) - t
