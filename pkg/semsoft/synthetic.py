"""
Seeded hierarchical Gaussian-cluster data for the toy trainer.

Each leaf class owns a cluster whose mean lies on the unit sphere. With
probability rho a sample's recorded label is replaced by a uniformly chosen
proper ancestor of its leaf, imitating partial tagging.
"""

import logging

import numpy as np

from semsoft.errors import NoLeaves
from semsoft.models import (
    DatasetManifest,
    SampleRecord,
    SyntheticDataset,
    SyntheticDatasetSpec,
    Taxonomy,
    sample_id_for,
)
from semsoft.taxonomy import ancestor_chain, parse_taxonomy

logger = logging.getLogger(__name__)


def default_synthetic_taxonomy(branching: tuple[int, ...] = (2, 3, 3)) -> Taxonomy:
    """
    Balanced forest: branching[0] roots, each node at depth d having
    branching[d + 1] children. The default gives 2/6/18 classes.
    """
    rows: list[tuple[str, str | None, str]] = []
    level = [f"h0_{i}" for i in range(branching[0])]
    rows.extend((class_id, None, class_id) for class_id in level)
    for depth, fanout in enumerate(branching[1:], start=1):
        next_level = []
        for parent in level:
            for j in range(fanout):
                class_id = f"h{depth}_{parent.split('_', 1)[1]}.{j}"
                rows.append((class_id, parent, class_id))
                next_level.append(class_id)
        level = next_level
    return parse_taxonomy(rows)


def generate_synthetic_dataset(spec: SyntheticDatasetSpec) -> SyntheticDataset:
    """
    Draw a dataset from `spec`; identical specs give identical datasets.

    Rows are grouped by leaf (leaves in logit order). Independent child
    generators of the seed drive the cluster means, the samples, the label
    truncation and the train/val assignment, so the means do not depend on
    samples_per_leaf.

    Raises:
        NoLeaves: If the taxonomy has no leaf class
    """
    t = spec.taxonomy
    leaves = t.leaves()
    if not leaves:
        raise NoLeaves()

    means_rng, sample_rng, truncate_rng, split_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(4)
    )

    means = means_rng.standard_normal((len(leaves), spec.feature_dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)

    n = len(leaves) * spec.samples_per_leaf
    leaf_of_row = np.repeat(np.arange(len(leaves)), spec.samples_per_leaf)
    noise = sample_rng.standard_normal((n, spec.feature_dim))
    features = means[leaf_of_row] + spec.cluster_spread * noise

    truncate = truncate_rng.random(n) < spec.label_truncation_prob
    pick = truncate_rng.random(n)
    is_val = split_rng.random(n) < spec.val_fraction

    class_ids: list[str] = []
    leaf_ids: list[str] = []
    records: list[SampleRecord] = []
    for i, leaf_index in enumerate(leaf_of_row):
        leaf = leaves[leaf_index].class_id
        recorded = leaf
        ancestors = ancestor_chain(t, leaf)[:-1]
        if truncate[i] and ancestors:
            recorded = ancestors[int(pick[i] * len(ancestors))]
        class_ids.append(recorded)
        leaf_ids.append(leaf)
        records.append(
            SampleRecord(
                sample_id=sample_id_for(i),
                class_id=recorded,
                split="val" if is_val[i] else "train",
            )
        )

    manifest = DatasetManifest(
        records=tuple(records),
        provenance=(
            f"synthetic(seed={spec.seed}, samples_per_leaf={spec.samples_per_leaf}, "
            f"rho={spec.label_truncation_prob}, sigma={spec.cluster_spread})"
        ),
    )
    logger.info(
        f"Generated {n} samples over {len(leaves)} leaves "
        f"({int(truncate.sum())} truncated, {int(is_val.sum())} val)"
    )
    return SyntheticDataset(
        taxonomy=t,
        features=features,
        class_ids=class_ids,
        leaf_ids=leaf_ids,
        manifest=manifest,
    )


def random_taxonomy(rng: np.random.Generator, num_classes: int, max_depth: int = 4) -> Taxonomy:
    """
    Random forest of `num_classes` classes: class i attaches to a uniformly
    chosen earlier class whose depth is below `max_depth`, or becomes a root.
    Class 0 is always a root.
    """
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    rows: list[tuple[str, str | None, str]] = []
    depth: list[int] = []
    for i in range(num_classes):
        candidates = [j for j in range(i) if depth[j] < max_depth - 1]
        if i == 0 or not candidates or rng.random() < 0.15:
            rows.append((f"c{i:04d}", None, f"class {i}"))
            depth.append(0)
        else:
            j = candidates[int(rng.integers(len(candidates)))]
            rows.append((f"c{i:04d}", f"c{j:04d}", f"class {i}"))
            depth.append(depth[j] + 1)
    return parse_taxonomy(rows)
