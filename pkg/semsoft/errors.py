"""
Exception hierarchy for semsoft.

Every error keeps its structured fields as attributes and carries the process
exit code the CLI should use: 1 for usage/config errors, 2 for data errors.
"""

from typing import Any, Optional


class SemsoftError(Exception):
    """Base class for all semsoft errors."""

    exit_code = 2


# Taxonomy errors
class TaxonomyError(SemsoftError):
    """Raised when a hypernym edge list cannot be turned into a forest."""


class CycleDetected(TaxonomyError):
    """A class is its own ancestor."""

    def __init__(self, cycle: list[str]) -> None:
        self.cycle = cycle
        super().__init__(f"Cycle detected in taxonomy: {' -> '.join(cycle)}")


class DanglingParent(TaxonomyError):
    """A row references a parent that is not listed."""

    def __init__(self, class_id: str, parent_id: str) -> None:
        self.class_id = class_id
        self.parent_id = parent_id
        super().__init__(f"Class '{class_id}' references unknown parent '{parent_id}'")


class DuplicateClassId(TaxonomyError):
    """The same class is listed twice without encoding a second parent."""

    def __init__(self, class_id: str) -> None:
        self.class_id = class_id
        super().__init__(f"Duplicate class id: '{class_id}'")


class MultiParentRejected(TaxonomyError):
    """A class has several parents and the DAG policy is 'reject'."""

    def __init__(self, class_id: str, parents: list[str]) -> None:
        self.class_id = class_id
        self.parents = parents
        super().__init__(f"Class '{class_id}' has multiple parents {parents} (dag_policy=reject)")


class EmptyTaxonomy(TaxonomyError):
    """The edge list has no class rows."""

    def __init__(self) -> None:
        super().__init__("Taxonomy edge list is empty")


class UnknownClass(TaxonomyError):
    """Lookup of a class id that is not in the taxonomy."""

    def __init__(self, class_id: str) -> None:
        self.class_id = class_id
        super().__init__(f"Unknown class: '{class_id}'")


# Dataset errors
class ManifestError(SemsoftError):
    """Base class for manifest and pixel-buffer problems."""


class ManifestIOError(ManifestError):
    """A manifest or buffer file could not be read or written."""

    def __init__(self, path: Any, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"I/O error on {path}: {reason}")


class MalformedRecord(ManifestError):
    """A manifest line does not match the record schema."""

    def __init__(self, line_number: int, reason: str = "") -> None:
        self.line_number = line_number
        self.reason = reason
        message = f"Malformed record on line {line_number}"
        if reason:
            message += f": {reason}"
        super().__init__(message)


class DuplicateSampleId(ManifestError):
    """Two records share a sample id."""

    def __init__(self, sample_id: str) -> None:
        self.sample_id = sample_id
        super().__init__(f"Duplicate sample id: '{sample_id}'")


class EmptyResult(ManifestError):
    """A transform removed every record."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Empty result: {reason}")


class ClassTooSmall(ManifestError):
    """A class has too few records to carve out its validation share."""

    def __init__(self, class_id: str, count: int, per_class: int) -> None:
        self.class_id = class_id
        self.count = count
        self.per_class = per_class
        super().__init__(
            f"Class '{class_id}' has {count} records, needs more than {per_class} for the val split"
        )


class PixelBufferError(ManifestError):
    """A pixel buffer file or array is inconsistent with its header."""


# Loss errors
class LossError(SemsoftError):
    """Base class for loss computation errors."""


class EmptyInput(LossError):
    """An operation received an empty vector."""

    def __init__(self, what: str = "values") -> None:
        super().__init__(f"Empty input: {what}")


class InvalidTarget(LossError):
    """A class index is out of range."""

    def __init__(self, target: int, num_classes: int) -> None:
        self.target = target
        self.num_classes = num_classes
        super().__init__(f"Target {target} is out of range for {num_classes} classes")


class DimensionMismatch(LossError):
    """Vector lengths disagree."""

    def __init__(self, expected: int, actual: int, what: str = "logits") -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class InconsistentLabel(LossError):
    """A semantic label does not fit the taxonomy."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Inconsistent semantic label: {reason}")


class DegenerateWeight(LossError):
    """A hierarchy has zero occurrences, so its weight is undefined."""

    def __init__(self, hierarchy: int, mode: str) -> None:
        self.hierarchy = hierarchy
        self.mode = mode
        super().__init__(f"O_{hierarchy} = 0 under mode '{mode}'; weight is undefined")


class EmptyHierarchy(LossError):
    """A hierarchy has no classes."""

    def __init__(self, hierarchy: int) -> None:
        self.hierarchy = hierarchy
        super().__init__(f"Hierarchy {hierarchy} has no classes")


class NotNormalized(LossError):
    """A probability vector does not sum to 1."""

    def __init__(self, total: float) -> None:
        self.total = total
        super().__init__(f"Probabilities sum to {total!r}, expected 1")


# Metric errors
class NoPositives(SemsoftError):
    """Average precision is undefined without a relevant item."""

    def __init__(self) -> None:
        super().__init__("Average precision is undefined: no positive items")


# Training errors
class TrainingError(SemsoftError):
    """Base class for toy-trainer errors."""


class ShapeMismatch(TrainingError):
    """Data and model dimensions disagree."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Shape mismatch: {reason}")


class NonFiniteLoss(TrainingError):
    """
    Training produced a NaN or infinite loss.

    `phase` is "train" for an update step and "eval" for the loss pass that
    follows each epoch; `batch` counts batches within that phase.
    """

    def __init__(self, epoch: int, batch: int, value: float, phase: str = "train") -> None:
        self.epoch = epoch
        self.batch = batch
        self.value = value
        self.phase = phase
        super().__init__(f"Non-finite loss {value!r} at epoch {epoch}, {phase} batch {batch}")


class NoLeaves(TrainingError):
    """A synthetic dataset needs at least one leaf class."""

    def __init__(self) -> None:
        super().__init__("Taxonomy has no leaf classes")


# Configuration and CLI errors
class ConfigError(SemsoftError):
    """The run configuration is invalid."""

    exit_code = 1

    def __init__(self, reason: str, key: Optional[str] = None) -> None:
        self.reason = reason
        self.key = key
        message = f"Config error for '{key}': {reason}" if key else f"Config error: {reason}"
        super().__init__(message)


class UsageError(SemsoftError):
    """The command line is invalid."""

    exit_code = 1
