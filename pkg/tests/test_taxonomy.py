"""
Tests for taxonomy parsing and label expansion.
"""

import numpy as np
import pytest

from semsoft.errors import (
    CycleDetected,
    DanglingParent,
    DuplicateClassId,
    EmptyTaxonomy,
    MalformedRecord,
    MultiParentRejected,
    UnknownClass,
)
from semsoft.taxonomy import (
    ancestor_chain,
    expand_label,
    hierarchy_examples,
    label_names,
    load_taxonomy_tsv,
    multi_hot,
    parse_taxonomy,
    read_edge_list,
    taxonomy_stats,
)
from tests.helpers import (
    COW_ROWS,
    SWAN_ROWS,
    parent_map,
    random_forest_rows,
    walk_chain,
    walk_depth,
    write_tsv,
)


def test_swan_chain_hierarchy():
    """Test the swan chain gives five hierarchies with swan at hierarchy 4."""
    t = parse_taxonomy(SWAN_ROWS)

    assert t.num_hierarchies == 5
    assert t.node("swan").hierarchy == 4
    assert taxonomy_stats(t) == [1, 1, 1, 1, 1]


def test_single_root():
    """Test a one-node forest."""
    t = parse_taxonomy([("r", None, "root")])

    assert t.num_hierarchies == 1
    assert t.sizes == [1]
    assert t.partitions == ((0,),)


def test_two_roots_three_children_each():
    """Test per-hierarchy counts of a two-level forest."""
    rows = [("a", None, "a"), ("b", None, "b")]
    rows += [(f"a{i}", "a", f"a{i}") for i in range(3)]
    rows += [(f"b{i}", "b", f"b{i}") for i in range(3)]

    assert taxonomy_stats(parse_taxonomy(rows)) == [2, 6]


def test_random_forest_levels_match_parent_walk():
    """Test hierarchy levels and logit_index against a parent-walk oracle."""
    rng = np.random.default_rng(0)
    for _ in range(500):
        rows = random_forest_rows(rng, int(rng.integers(1, 301)))
        parents = parent_map(rows)
        t = parse_taxonomy(rows)

        for class_id in parents:
            assert t.node(class_id).hierarchy == walk_depth(parents, class_id)

        # logit_index is a bijection onto (k, i) slots
        slots = set(t.logit_index.values())
        assert len(slots) == len(parents)
        for k, size in enumerate(t.sizes):
            assert {i for kk, i in slots if kk == k} == set(range(size))
        for class_id, (k, i) in t.logit_index.items():
            assert t.class_at(k, i).class_id == class_id

        histogram = np.bincount([walk_depth(parents, c) for c in parents])
        assert taxonomy_stats(t) == histogram.tolist()


def test_random_forest_chains_and_labels():
    """Test ancestor chains and label expansion against brute-force walks."""
    rng = np.random.default_rng(1)
    for _ in range(50):
        rows = random_forest_rows(rng, 200)
        parents = parent_map(rows)
        t = parse_taxonomy(rows)
        for class_id in parents:
            chain = walk_chain(parents, class_id)
            assert ancestor_chain(t, class_id) == chain

            label = expand_label(t, class_id)
            expected = [None] * t.num_hierarchies
            for member in chain:
                k, i = t.logit_index[member]
                expected[k] = i
            assert list(label.per_hierarchy) == expected
            assert label.max_hierarchy == len(chain) - 1


def test_cow_chain():
    """Test the ancestor chain of a class on a second branch."""
    t = parse_taxonomy(COW_ROWS)

    assert ancestor_chain(t, "cow") == ["animal", "vertebrate", "mammal", "placental", "cow"]
    assert ancestor_chain(t, "animal") == ["animal"]


def test_expand_swan():
    """Test swan expands to five active entries naming its ancestors."""
    t = parse_taxonomy(COW_ROWS)
    label = expand_label(t, "swan")

    assert label.max_hierarchy == 4
    names = [t.class_at(k, i).name for k, i in enumerate(label.per_hierarchy) if i is not None]
    assert names == ["animal", "vertebrate", "bird", "aquatic bird", "swan"]
    assert label_names(t, "swan") == names


def test_expand_root_and_inactive_entries():
    """Test a root label has only hierarchy 0 active."""
    t = parse_taxonomy(COW_ROWS)
    label = expand_label(t, "animal")

    assert label.per_hierarchy[0] == 0
    assert all(entry is None for entry in label.per_hierarchy[1:])
    assert not label.is_active(1)


def test_multi_hot_marks_chain():
    """Test the binary target sets exactly the label and its ancestors."""
    t = parse_taxonomy(COW_ROWS)
    target = multi_hot(t, "cow")

    assert target.sum() == 5
    for member in ["animal", "vertebrate", "mammal", "placental", "cow"]:
        assert target[t.global_index(member)] == 1.0


def test_groups_are_contiguous_slices():
    """Test each hierarchy owns a contiguous logit slice in class_id order."""
    t = parse_taxonomy(COW_ROWS)

    assert t.sizes == [1, 1, 2, 2, 2]
    assert [c.class_id for c in t.classes[t.group_slice(2)]] == ["bird", "mammal"]
    assert [c.class_id for c in t.classes[t.group_slice(4)]] == ["cow", "swan"]


def test_cycle_detected():
    """Test a cycle is rejected."""
    rows = [("r", None, "r"), ("a", "b", "a"), ("b", "a", "b")]

    with pytest.raises(CycleDetected) as exc_info:
        parse_taxonomy(rows)
    assert set(exc_info.value.cycle) == {"a", "b"}


def test_dangling_parent():
    """Test a parent that is never listed."""
    with pytest.raises(DanglingParent) as exc_info:
        parse_taxonomy([("a", None, "a"), ("b", "ghost", "b")])
    assert exc_info.value.parent_id == "ghost"


def test_duplicate_class_id():
    """Test a repeated row and a conflicting name are both duplicates."""
    with pytest.raises(DuplicateClassId):
        parse_taxonomy([("a", None, "a"), ("a", None, "a")])
    with pytest.raises(DuplicateClassId):
        parse_taxonomy([("a", None, "a"), ("b", "a", "b"), ("b", None, "other")])


def test_multi_parent_reject_policy():
    """Test the reject policy refuses a DAG."""
    rows = [("a", None, "a"), ("b", None, "b"), ("c", "a", "c"), ("c", "b", "c")]

    with pytest.raises(MultiParentRejected) as exc_info:
        parse_taxonomy(rows, dag_policy="reject")
    assert exc_info.value.parents == ["a", "b"]


def test_min_depth_parent_policy():
    """Test the shallowest parent wins, ties to the smallest parent id."""
    rows = [
        ("a", None, "a"),
        ("b", None, "b"),
        ("deep", "a", "deep"),
        ("x", "deep", "x"),
        ("x", "b", "x"),
        ("y", "b", "y"),
        ("y", "a", "y"),
    ]
    t = parse_taxonomy(rows)

    assert t.node("x").parent == "b"
    assert t.node("x").hierarchy == 1
    assert t.node("y").parent == "a"


def test_unknown_class():
    """Test lookups of a missing class."""
    t = parse_taxonomy(SWAN_ROWS)

    with pytest.raises(UnknownClass):
        expand_label(t, "goose")
    with pytest.raises(UnknownClass):
        label_names(t, "goose")


def test_empty_edge_list():
    """Test an empty edge list is rejected."""
    with pytest.raises(EmptyTaxonomy):
        parse_taxonomy([])


def test_load_tsv(tmp_path):
    """Test reading the TSV format with comments and root rows."""
    path = write_tsv(tmp_path / "tax.tsv", SWAN_ROWS)
    path.write_text("# class\tparent\tname\n" + path.read_text())

    t = load_taxonomy_tsv(path)
    assert t.num_hierarchies == 5
    assert t.node("aquatic_bird").name == "aquatic bird"


def test_read_edge_list_malformed(tmp_path):
    """Test a line with the wrong number of fields."""
    path = tmp_path / "bad.tsv"
    path.write_text("a\t\ta\nb\ta\n")

    with pytest.raises(MalformedRecord) as exc_info:
        read_edge_list(path)
    assert exc_info.value.line_number == 2


def test_hierarchy_examples():
    """Test the per-hierarchy example names."""
    t = parse_taxonomy(COW_ROWS)

    assert hierarchy_examples(t, 1) == [
        ["animal"],
        ["vertebrate"],
        ["bird"],
        ["aquatic bird"],
        ["cow"],
    ]
    assert hierarchy_examples(t)[2] == ["bird", "mammal"]
