"""
Semantic taxonomy: hypernym edge list -> canonical forest -> per-hierarchy labels.

The forest is built as a networkx DiGraph with parent -> child edges. A class's
hierarchy is its number of ancestors; roots sit at hierarchy 0.
"""

import logging
from collections import defaultdict
from pathlib import Path
from typing import Optional

import networkx as nx
import numpy as np

from semsoft.errors import (
    CycleDetected,
    DanglingParent,
    DuplicateClassId,
    EmptyTaxonomy,
    ManifestIOError,
    MalformedRecord,
    MultiParentRejected,
    UnknownClass,
)
from semsoft.models import ClassNode, DagPolicy, SemanticLabel, Taxonomy

logger = logging.getLogger(__name__)

# (class_id, parent_id or None, name)
EdgeRow = tuple[str, Optional[str], str]


def read_edge_list(path: str | Path) -> list[EdgeRow]:
    """
    Read a taxonomy TSV file.

    Each non-comment line is `class_id<TAB>parent_id<TAB>name`; an empty
    parent_id marks a root and lines starting with '#' are ignored.

    Args:
        path: Path to the TSV file

    Returns:
        Rows in file order
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e

    rows: list[EdgeRow] = []
    for line_number, line in enumerate(text.split("\n"), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.rstrip("\r").split("\t")
        if len(fields) != 3 or not fields[0]:
            raise MalformedRecord(line_number, "expected class_id<TAB>parent_id<TAB>name")
        class_id, parent_id, name = fields
        rows.append((class_id, parent_id or None, name))
    return rows


def load_taxonomy_tsv(path: str | Path, dag_policy: DagPolicy = "min_depth_parent") -> Taxonomy:
    """Read a TSV edge list and parse it into a Taxonomy."""
    return parse_taxonomy(read_edge_list(path), dag_policy=dag_policy)


def _collect_parents(
    entries: list[EdgeRow],
) -> tuple[dict[str, set[Optional[str]]], dict[str, str]]:
    parents: dict[str, set[Optional[str]]] = defaultdict(set)
    names: dict[str, str] = {}
    for class_id, parent_id, name in entries:
        if class_id in names:
            if names[class_id] != name or parent_id in parents[class_id]:
                raise DuplicateClassId(class_id)
        names[class_id] = name
        parents[class_id].add(parent_id)
    return parents, names


def parse_taxonomy(
    entries: list[EdgeRow], dag_policy: DagPolicy = "min_depth_parent"
) -> Taxonomy:
    """
    Build a canonical forest from a hypernym edge list.

    A class listed in several rows with different parents makes the input a
    DAG. Under `reject` that is an error; under `min_depth_parent` the parent
    giving the smallest hierarchy wins, ties going to the lexicographically
    smallest parent id (a root row counts as depth -1, so it always wins).

    Args:
        entries: (class_id, parent_id or None, name) rows, any order
        dag_policy: "reject" or "min_depth_parent"

    Returns:
        The Taxonomy, classes ordered by (hierarchy, class_id)

    Raises:
        EmptyTaxonomy, CycleDetected, DanglingParent, DuplicateClassId,
        MultiParentRejected
    """
    if not entries:
        raise EmptyTaxonomy()

    parents, names = _collect_parents(entries)

    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(names))
    for class_id in sorted(parents):
        for parent_id in sorted(p for p in parents[class_id] if p is not None):
            if parent_id not in names:
                raise DanglingParent(class_id, parent_id)
            graph.add_edge(parent_id, class_id)

    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        raise CycleDetected([u for u, _ in cycle] + [cycle[0][0]])

    chosen: dict[str, Optional[str]] = {}
    depth: dict[str, int] = {}
    resolved = 0
    for class_id in nx.lexicographical_topological_sort(graph):
        options = parents[class_id]
        if len(options) > 1:
            if dag_policy == "reject":
                raise MultiParentRejected(class_id, sorted(str(p) for p in options))
            resolved += 1
        best = min(options, key=lambda p: (-1, "") if p is None else (depth[p], p))
        chosen[class_id] = best
        depth[class_id] = 0 if best is None else depth[best] + 1

    if resolved:
        logger.warning(f"Resolved {resolved} multi-parent classes with the min-depth policy")

    num_hierarchies = max(depth.values()) + 1
    by_level: list[list[str]] = [[] for _ in range(num_hierarchies)]
    for class_id in sorted(depth):
        by_level[depth[class_id]].append(class_id)

    classes: list[ClassNode] = []
    partitions: list[tuple[int, ...]] = []
    logit_index: dict[str, tuple[int, int]] = {}
    for k, level in enumerate(by_level):
        start = len(classes)
        for i, class_id in enumerate(level):
            classes.append(
                ClassNode(
                    class_id=class_id,
                    name=names[class_id],
                    parent=chosen[class_id],
                    hierarchy=k,
                    within_hierarchy_index=i,
                )
            )
            logit_index[class_id] = (k, i)
        partitions.append(tuple(range(start, len(classes))))

    taxonomy = Taxonomy(
        classes=tuple(classes),
        num_hierarchies=num_hierarchies,
        partitions=tuple(partitions),
        logit_index=logit_index,
    )
    logger.info(
        f"Parsed taxonomy: {taxonomy.num_classes} classes in {num_hierarchies} hierarchies"
    )
    return taxonomy


def ancestor_chain(t: Taxonomy, class_id: str) -> list[str]:
    """
    Chain from the root down to `class_id`, ordered by ascending hierarchy.

    Raises:
        UnknownClass: If the class is not in the taxonomy
    """
    chain = [class_id]
    node = t.node(class_id)
    while node.parent is not None:
        chain.append(node.parent)
        node = t.node(node.parent)
    chain.reverse()
    return chain


def expand_label(t: Taxonomy, class_id: str) -> SemanticLabel:
    """
    Expand a single label into its semantic multi-label.

    Entry k holds the within-hierarchy index of the ancestor at hierarchy k for
    k <= hierarchy(class_id) and is inactive (None) above it.
    """
    chain = ancestor_chain(t, class_id)
    per_hierarchy: list[Optional[int]] = [None] * t.num_hierarchies
    for member in chain:
        k, index = t.logit_index[member]
        per_hierarchy[k] = index
    return SemanticLabel(per_hierarchy=tuple(per_hierarchy), max_hierarchy=len(chain) - 1)


def multi_hot(t: Taxonomy, class_id: str) -> np.ndarray:
    """Binary target over all classes with the label and all its ancestors set."""
    target = np.zeros(t.num_classes, dtype=np.float64)
    for member in ancestor_chain(t, class_id):
        target[t.global_index(member)] = 1.0
    return target


def taxonomy_stats(t: Taxonomy) -> list[int]:
    """Per-hierarchy class counts N_0..N_{K-1}."""
    return t.sizes


def hierarchy_examples(t: Taxonomy, per_hierarchy: int = 3) -> list[list[str]]:
    """The first few class names of each hierarchy, in logit order."""
    return [
        [t.classes[i].name for i in part[:per_hierarchy]] for part in t.partitions
    ]


def label_names(t: Taxonomy, class_id: str) -> list[str]:
    """Names along the ancestor chain, e.g. animal, vertebrate, ..., swan."""
    if class_id not in t:
        raise UnknownClass(class_id)
    return [t.node(member).name for member in ancestor_chain(t, class_id)]
