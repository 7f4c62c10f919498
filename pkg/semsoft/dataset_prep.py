"""
Dataset preprocessing: infrequent-class removal, standardized validation split
and squish-resizing of decoded pixel buffers.
"""

import json
import logging
import struct
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from semsoft.errors import (
    ClassTooSmall,
    DuplicateSampleId,
    EmptyResult,
    MalformedRecord,
    ManifestIOError,
    PixelBufferError,
)
from semsoft.models import DatasetManifest, PixelBuffer, SampleRecord

logger = logging.getLogger(__name__)

PIXEL_HEADER = struct.Struct("<3I")


def load_manifest(path: str | Path) -> DatasetManifest:
    """
    Load a JSONL manifest.

    Args:
        path: File with one {"sample_id", "class_id", "split"} object per line

    Returns:
        Manifest sorted by sample_id

    Raises:
        ManifestIOError: If the file cannot be read
        MalformedRecord: If a line is not a valid record (1-based line number)
        DuplicateSampleId: If two lines share a sample id
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e

    records: list[SampleRecord] = []
    seen: set[str] = set()
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
            if not isinstance(payload, dict):
                raise ValueError("expected a JSON object")
            record = SampleRecord(**payload)
        except (ValueError, TypeError, ValidationError) as e:
            raise MalformedRecord(line_number, str(e).splitlines()[0]) from e
        if record.sample_id in seen:
            raise DuplicateSampleId(record.sample_id)
        seen.add(record.sample_id)
        records.append(record)

    logger.info(f"Loaded {len(records)} records from {path}")
    return DatasetManifest(records=tuple(records), provenance=f"loaded from {path.name}")


def save_manifest(m: DatasetManifest, path: str | Path) -> None:
    """Write a manifest as JSONL; the unassigned split is written as null."""
    lines = []
    for record in m.records:
        split = None if record.split == "unassigned" else record.split
        lines.append(
            json.dumps({"sample_id": record.sample_id, "class_id": record.class_id, "split": split})
        )
    try:
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e


def class_histogram(m: DatasetManifest) -> dict[str, int]:
    """Number of records per class, keyed in class_id order."""
    counts = Counter(record.class_id for record in m.records)
    return {class_id: counts[class_id] for class_id in sorted(counts)}


def filter_infrequent(m: DatasetManifest, min_samples: int = 500) -> DatasetManifest:
    """
    Remove classes with fewer than `min_samples` records.

    The threshold is strict: a class with exactly `min_samples` records survives.

    Raises:
        ValueError: If min_samples < 1
        EmptyResult: If every class is removed
    """
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")

    histogram = class_histogram(m)
    kept_classes = {c for c, n in histogram.items() if n >= min_samples}
    if not kept_classes:
        raise EmptyResult(f"no class has at least {min_samples} records")

    kept = [r for r in m.records if r.class_id in kept_classes]
    logger.info(
        f"Kept {len(kept_classes)}/{len(histogram)} classes, {len(kept)}/{len(m)} records "
        f"(min_samples={min_samples})"
    )
    return m.with_records(kept, f"filter_infrequent(min_samples={min_samples})")


def make_val_split(m: DatasetManifest, per_class: int = 50, seed: int = 0) -> DatasetManifest:
    """
    Mark exactly `per_class` records of every class as val, the rest as train.

    Classes are visited in class_id order; for each, `per_class` positions are
    drawn uniformly without replacement from its records sorted by sample_id,
    using one generator seeded with `seed`.

    Raises:
        ValueError: If per_class < 0
        ClassTooSmall: If a class has no more than `per_class` records
    """
    if per_class < 0:
        raise ValueError(f"per_class must be >= 0, got {per_class}")

    by_class: dict[str, list[SampleRecord]] = defaultdict(list)
    for record in m.records:
        by_class[record.class_id].append(record)

    rng = np.random.default_rng(seed)
    val_ids: set[str] = set()
    for class_id in sorted(by_class):
        members = by_class[class_id]  # already in sample_id order
        if per_class == 0:
            continue
        if len(members) <= per_class:
            raise ClassTooSmall(class_id, len(members), per_class)
        picks = rng.choice(len(members), size=per_class, replace=False)
        val_ids.update(members[i].sample_id for i in picks)

    records = [
        r.model_copy(update={"split": "val" if r.sample_id in val_ids else "train"})
        for r in m.records
    ]
    logger.info(f"Split {len(m)} records: {len(val_ids)} val, {len(m) - len(val_ids)} train")
    return m.with_records(records, f"make_val_split(per_class={per_class}, seed={seed})")


def _resize_axis(values: np.ndarray, target: int, axis: int) -> np.ndarray:
    size = values.shape[axis]
    if size == target:
        return values
    # half-pixel centers: output pixel i samples input coordinate (i + 0.5) * size / target - 0.5
    coords = (np.arange(target, dtype=np.float64) + 0.5) * (size / target) - 0.5
    coords = np.clip(coords, 0.0, size - 1)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, size - 1)
    frac = coords - lo
    shape = [1] * values.ndim
    shape[axis] = target
    frac = frac.reshape(shape)
    return np.take(values, lo, axis=axis) * (1.0 - frac) + np.take(values, hi, axis=axis) * frac


def squish_resize(img: PixelBuffer, target: int = 224) -> PixelBuffer:
    """
    Resize to target x target regardless of aspect ratio.

    Bilinear resampling with half-pixel centers and edge clamping, applied
    separably (rows, then columns).
    """
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    if img.width == target and img.height == target:
        return img

    out = _resize_axis(img.data, target, axis=0)
    out = _resize_axis(out, target, axis=1)
    # keep the convex-combination bound exact under rounding
    out = np.clip(out, img.data.min(), img.data.max())
    return PixelBuffer(width=target, height=target, data=out)


def resize_many(
    buffers: list[PixelBuffer], target: int = 224, max_workers: Optional[int] = None
) -> list[PixelBuffer]:
    """Apply squish_resize concurrently; results come back in input order."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda b: squish_resize(b, target), buffers))


def read_pixel_buffer(path: str | Path) -> PixelBuffer:
    """
    Read the flat binary buffer format: 3 little-endian u32 (width, height,
    channels) followed by width*height*channels little-endian float32 values,
    row-major and channel-interleaved.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e

    if len(raw) < PIXEL_HEADER.size:
        raise PixelBufferError(f"{path}: truncated header")
    width, height, channels = PIXEL_HEADER.unpack_from(raw)
    if channels != 3:
        raise PixelBufferError(f"{path}: expected 3 channels, got {channels}")
    expected = width * height * channels * 4
    payload = raw[PIXEL_HEADER.size:]
    if len(payload) != expected:
        raise PixelBufferError(f"{path}: expected {expected} payload bytes, got {len(payload)}")

    data = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width, channels)
    try:
        return PixelBuffer(width=width, height=height, data=data)
    except ValidationError as e:
        raise PixelBufferError(f"{path}: {e.errors()[0]['msg']}") from e


def write_pixel_buffer(img: PixelBuffer, path: str | Path) -> None:
    """Write a buffer in the flat binary format (values stored as float32)."""
    header = PIXEL_HEADER.pack(img.width, img.height, img.channels)
    try:
        Path(path).write_bytes(header + img.data.astype("<f4").tobytes())
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e
