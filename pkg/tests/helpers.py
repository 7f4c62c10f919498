"""
Shared fixtures-by-function for the test suite: random forests and
brute-force oracles that do not reuse library code paths.
"""

import json
from pathlib import Path
from typing import Optional

import numpy as np

SWAN_ROWS = [
    ("animal", None, "animal"),
    ("vertebrate", "animal", "vertebrate"),
    ("bird", "vertebrate", "bird"),
    ("aquatic_bird", "bird", "aquatic bird"),
    ("swan", "aquatic_bird", "swan"),
]

COW_ROWS = SWAN_ROWS + [
    ("mammal", "vertebrate", "mammal"),
    ("placental", "mammal", "placental"),
    ("cow", "placental", "cow"),
]


def random_forest_rows(
    rng: np.random.Generator, num_nodes: int
) -> list[tuple[str, Optional[str], str]]:
    """Node i attaches to a uniformly chosen earlier node, or is a root; node 0 is a root."""
    rows: list[tuple[str, Optional[str], str]] = []
    for i in range(num_nodes):
        if i == 0 or rng.random() < 0.1:
            parent = None
        else:
            parent = f"n{int(rng.integers(i)):03d}"
        rows.append((f"n{i:03d}", parent, f"node {i}"))
    return rows


def parent_map(rows: list[tuple[str, Optional[str], str]]) -> dict[str, Optional[str]]:
    return {class_id: parent for class_id, parent, _ in rows}


def walk_depth(parents: dict[str, Optional[str]], class_id: str) -> int:
    depth = 0
    while parents[class_id] is not None:
        class_id = parents[class_id]  # type: ignore[assignment]
        depth += 1
    return depth


def walk_chain(parents: dict[str, Optional[str]], class_id: str) -> list[str]:
    chain = [class_id]
    while parents[chain[-1]] is not None:
        chain.append(parents[chain[-1]])  # type: ignore[arg-type]
    return chain[::-1]


def write_tsv(path: Path, rows: list[tuple[str, Optional[str], str]]) -> Path:
    path.write_text(
        "".join(f"{c}\t{p or ''}\t{n}\n" for c, p, n in rows), encoding="utf-8"
    )
    return path


def write_manifest(path: Path, counts: dict[str, int], split: Optional[str] = None) -> Path:
    """JSONL manifest with counts[class_id] records per class."""
    lines = []
    index = 0
    for class_id, count in counts.items():
        for _ in range(count):
            record = {"sample_id": f"x{index:06d}", "class_id": class_id, "split": split}
            lines.append(json.dumps(record))
            index += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def naive_bilinear(data: np.ndarray, target: int) -> np.ndarray:
    """Scalar-loop half-pixel bilinear resize with edge clamping."""
    height, width, channels = data.shape
    out = np.zeros((target, target, channels))
    for i in range(target):
        y = min(max((i + 0.5) * height / target - 0.5, 0.0), height - 1)
        y0 = int(np.floor(y))
        y1 = min(y0 + 1, height - 1)
        fy = y - y0
        for j in range(target):
            x = min(max((j + 0.5) * width / target - 0.5, 0.0), width - 1)
            x0 = int(np.floor(x))
            x1 = min(x0 + 1, width - 1)
            fx = x - x0
            for c in range(channels):
                top = data[y0, x0, c] * (1 - fx) + data[y0, x1, c] * fx
                bottom = data[y1, x0, c] * (1 - fx) + data[y1, x1, c] * fx
                out[i, j, c] = top * (1 - fy) + bottom * fy
    return out


def rank_walk_ap(scores: list[float], relevance: list[int]) -> float:
    """AP by walking the ranking one item at a time."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    precisions = []
    for rank, i in enumerate(order, start=1):
        if relevance[i]:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / len(precisions)
