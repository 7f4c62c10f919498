"""
Hierarchy aggregation weights W_k = 1 / O_k for the semantic softmax loss.

Modes:
    empirical   O_k = number of training samples whose label reaches hierarchy k
                (the exact activation count of softmax k)
    class_mass  O_k = sum_{j >= k} N_j
    as_printed  O_k = sum_{j < k} N_j; O_0 = 0 is rejected as degenerate
    uniform     W_k = 1
"""

import json
import logging
from pathlib import Path
from typing import Optional

from semsoft.errors import DegenerateWeight, EmptyHierarchy, ManifestIOError
from semsoft.models import DatasetManifest, HierarchyWeights, Taxonomy, WeightMode

logger = logging.getLogger(__name__)


def _occurrences(t: Taxonomy, m: Optional[DatasetManifest], mode: WeightMode) -> list[float]:
    sizes = t.sizes
    num = t.num_hierarchies
    if mode == "uniform":
        return [1.0] * num
    if mode == "class_mass":
        return [float(sum(sizes[k:])) for k in range(num)]
    if mode == "as_printed":
        return [float(sum(sizes[:k])) for k in range(num)]

    if m is None:
        raise ValueError("empirical weights need a manifest")
    counts = [0] * num
    for record in m.records:
        if record.split == "val":
            continue
        depth = t.node(record.class_id).hierarchy
        for k in range(depth + 1):
            counts[k] += 1
    return [float(c) for c in counts]


def compute_hierarchy_weights(
    t: Taxonomy, m: Optional[DatasetManifest] = None, mode: WeightMode = "empirical"
) -> HierarchyWeights:
    """
    Derive the per-hierarchy weights of the balanced semantic softmax loss.

    Args:
        t: Taxonomy
        m: Manifest (required for `empirical`); every non-val record counts
            as a training sample
        mode: "empirical", "class_mass", "as_printed" or "uniform"

    Raises:
        EmptyHierarchy: If a hierarchy has no classes
        DegenerateWeight: If some O_k is zero
        UnknownClass: If a manifest label is not in the taxonomy
    """
    for k, size in enumerate(t.sizes):
        if size == 0:
            raise EmptyHierarchy(k)

    occurrences = _occurrences(t, m, mode)
    for k, o in enumerate(occurrences):
        if o == 0:
            raise DegenerateWeight(k, mode)

    weights = [1.0] * len(occurrences) if mode == "uniform" else [1.0 / o for o in occurrences]
    logger.debug(f"Hierarchy weights ({mode}): O={occurrences}, W={weights}")
    return HierarchyWeights(mode=mode, O=occurrences, W=weights)


def save_weights(w: HierarchyWeights, path: str | Path) -> None:
    """Write {"mode", "O", "W"} JSON."""
    try:
        Path(path).write_text(json.dumps(w.model_dump(), indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e
