"""
Pydantic v2 models for taxonomy, dataset, loss, metric and training data structures.
"""

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from semsoft.errors import DuplicateSampleId, UnknownClass

Split = Literal["train", "val", "unassigned"]
DagPolicy = Literal["reject", "min_depth_parent"]
WeightMode = Literal["empirical", "class_mass", "as_printed", "uniform"]
Scheme = Literal["single_label", "multi_label", "semantic_softmax"]
KDMode = Literal["off", "vanilla", "confidence_weighted", "regular"]


# Taxonomy Models
class ClassNode(BaseModel):
    """One class of the semantic forest."""

    model_config = ConfigDict(frozen=True)

    class_id: str
    name: str
    parent: Optional[str] = None  # None iff hierarchy == 0
    hierarchy: int = Field(ge=0)
    within_hierarchy_index: int = Field(ge=0)


class Taxonomy(BaseModel):
    """
    Immutable forest of classes.

    Classes are stored hierarchy-major (hierarchy, then class_id), so the global
    logit index of a class is its position in `classes` and each hierarchy owns
    a contiguous slice of the logit vector.
    """

    model_config = ConfigDict(frozen=True)

    classes: tuple[ClassNode, ...]
    num_hierarchies: int
    partitions: tuple[tuple[int, ...], ...]
    logit_index: dict[str, tuple[int, int]]

    _by_id: dict[str, int] = PrivateAttr(default_factory=dict)
    _offsets: tuple[int, ...] = PrivateAttr(default=())

    def model_post_init(self, __context: Any) -> None:
        self._by_id = {node.class_id: i for i, node in enumerate(self.classes)}
        offsets = [0]
        for part in self.partitions:
            offsets.append(offsets[-1] + len(part))
        self._offsets = tuple(offsets)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def sizes(self) -> list[int]:
        """Class counts N_0..N_{K-1}."""
        return [len(part) for part in self.partitions]

    def __contains__(self, class_id: object) -> bool:
        return class_id in self._by_id

    def global_index(self, class_id: str) -> int:
        """Position of a class in the logit vector."""
        try:
            return self._by_id[class_id]
        except KeyError:
            raise UnknownClass(class_id) from None

    def node(self, class_id: str) -> ClassNode:
        return self.classes[self.global_index(class_id)]

    def group_slice(self, k: int) -> slice:
        """Logit slice owned by hierarchy k."""
        return slice(self._offsets[k], self._offsets[k + 1])

    def class_at(self, k: int, index: int) -> ClassNode:
        """Class at within-hierarchy position `index` of hierarchy k."""
        return self.classes[self.partitions[k][index]]

    def leaves(self) -> list[ClassNode]:
        parents = {node.parent for node in self.classes if node.parent is not None}
        return [node for node in self.classes if node.class_id not in parents]


class SemanticLabel(BaseModel):
    """
    Per-hierarchy ground truth of one sample.

    Entry k holds the within-hierarchy index of the label's ancestor at
    hierarchy k, or None (inactive) above the label's own hierarchy.
    """

    model_config = ConfigDict(frozen=True)

    per_hierarchy: tuple[Optional[int], ...]
    max_hierarchy: int

    @model_validator(mode="after")
    def _check_active_prefix(self) -> "SemanticLabel":
        active = [entry is not None for entry in self.per_hierarchy]
        if not active or not active[0]:
            raise ValueError("hierarchy 0 must be active")
        expected = [k <= self.max_hierarchy for k in range(len(active))]
        if active != expected:
            raise ValueError(
                f"entries 0..{self.max_hierarchy} must be active and the rest inactive"
            )
        return self

    def is_active(self, k: int) -> bool:
        return k <= self.max_hierarchy


# Dataset Models
class SampleRecord(BaseModel):
    """One labeled sample of a manifest."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sample_id: str
    class_id: str
    split: Split = "unassigned"

    @field_validator("split", mode="before")
    @classmethod
    def _null_is_unassigned(cls, value: Any) -> Any:
        return "unassigned" if value is None else value


class DatasetManifest(BaseModel):
    """Ordered collection of sample records, always sorted by sample_id."""

    model_config = ConfigDict(frozen=True)

    records: tuple[SampleRecord, ...] = ()
    provenance: str = ""

    @field_validator("records")
    @classmethod
    def _sort_and_check(cls, records: tuple[SampleRecord, ...]) -> tuple[SampleRecord, ...]:
        ordered = tuple(sorted(records, key=lambda r: r.sample_id))
        for prev, cur in zip(ordered, ordered[1:]):
            if prev.sample_id == cur.sample_id:
                raise DuplicateSampleId(cur.sample_id)
        return ordered

    def __len__(self) -> int:
        return len(self.records)

    def with_records(self, records: list[SampleRecord], note: str) -> "DatasetManifest":
        """New manifest with the given records and `note` appended to the provenance."""
        provenance = f"{self.provenance}; {note}" if self.provenance else note
        return DatasetManifest(records=tuple(records), provenance=provenance)


class PixelBuffer(BaseModel):
    """Decoded RGB image, values in [0, 1], stored as a (height, width, channels) array."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    channels: Literal[3] = 3
    data: np.ndarray

    @model_validator(mode="after")
    def _check_data(self) -> "PixelBuffer":
        expected = (self.height, self.width, self.channels)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match {expected}")
        if not np.all((self.data >= 0.0) & (self.data <= 1.0)):
            raise ValueError("pixel values must lie in [0, 1]")
        return self

    @classmethod
    def from_array(cls, data: np.ndarray) -> "PixelBuffer":
        array = np.asarray(data, dtype=np.float64)
        return cls(width=array.shape[1], height=array.shape[0], data=array)


# Loss Models
class BinaryLossConfig(BaseModel):
    """Focusing exponents of the asymmetric binary loss."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma_pos: float = Field(default=0.0, ge=0.0)
    gamma_neg: float = Field(default=4.0, ge=0.0)

    @classmethod
    def cross_entropy(cls) -> "BinaryLossConfig":
        return cls(gamma_pos=0.0, gamma_neg=0.0)

    @classmethod
    def focal(cls) -> "BinaryLossConfig":
        return cls(gamma_pos=2.0, gamma_neg=2.0)

    @classmethod
    def asl(cls) -> "BinaryLossConfig":
        return cls(gamma_pos=0.0, gamma_neg=4.0)


class HierarchyWeights(BaseModel):
    """Aggregation weights W_k and the occurrence statistics O_k they came from."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: WeightMode
    O: list[float]
    W: list[float]

    @model_validator(mode="after")
    def _check_positive(self) -> "HierarchyWeights":
        if len(self.O) != len(self.W):
            raise ValueError("O and W must have the same length")
        if not all(np.isfinite(w) and w > 0 for w in self.W):
            raise ValueError("every W_k must be finite and positive")
        return self


class LossResult(BaseModel):
    """Scalar loss, per-hierarchy breakdown and gradient with respect to the logits."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    total: float
    per_hierarchy: list[float]
    grad: np.ndarray
    metadata: dict[str, Any] = Field(default_factory=dict)


class TeacherOutput(BaseModel):
    """Teacher logits with the per-hierarchy confidence P_i."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    logits: np.ndarray
    confidences: list[float]

    @field_validator("confidences")
    @classmethod
    def _check_range(cls, confidences: list[float]) -> list[float]:
        if any(p < 0.0 or p > 1.0 for p in confidences):
            raise ValueError("teacher confidences must lie in [0, 1]")
        return confidences


# Metric Models
class PredictionBatch(BaseModel):
    """Logits for a batch of samples and the matching labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    logits: np.ndarray  # (num_samples, num_classes)
    labels: list[Any]  # class indices, SemanticLabels or binary vectors

    @model_validator(mode="after")
    def _check_lengths(self) -> "PredictionBatch":
        if self.logits.ndim != 2:
            raise ValueError("logits must be a (num_samples, num_classes) array")
        if self.logits.shape[0] != len(self.labels):
            raise ValueError(
                f"{self.logits.shape[0]} logit rows but {len(self.labels)} labels"
            )
        return self


class HierarchyAccuracy(BaseModel):
    """Top-1 accuracy of one hierarchy and the number of samples it was computed on."""

    model_config = ConfigDict(frozen=True)

    accuracy: float
    support: int


class SemanticAccuracyReport(BaseModel):
    """Per-hierarchy top-1 accuracies and their class-count weighted total."""

    model_config = ConfigDict(frozen=True)

    per_hierarchy_top1: list[HierarchyAccuracy]
    weighted_total: float


class MapReport(BaseModel):
    """Micro and macro mean average precision."""

    model_config = ConfigDict(frozen=True)

    micro_map: float
    macro_map: float


# Training Models
class SyntheticDatasetSpec(BaseModel):
    """Parameters of a seeded hierarchical Gaussian-cluster dataset."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    taxonomy: Taxonomy
    samples_per_leaf: int = Field(default=50, ge=1)
    feature_dim: int = Field(default=32, ge=1)
    cluster_spread: float = Field(default=0.1, gt=0.0)
    label_truncation_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    val_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    seed: int = 0


class SyntheticDataset(BaseModel):
    """Features, recorded labels and the manifest describing the split."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    taxonomy: Taxonomy
    features: np.ndarray  # (num_samples, feature_dim), row i is sample i
    class_ids: list[str]  # recorded label, possibly truncated to an ancestor
    leaf_ids: list[str]  # leaf cluster the features were drawn from
    manifest: DatasetManifest

    def split_indices(self, split: Split) -> np.ndarray:
        """Row indices of the samples assigned to `split`, in sample order."""
        wanted = {r.sample_id for r in self.manifest.records if r.split == split}
        return np.array(
            [i for i in range(len(self.class_ids)) if sample_id_for(i) in wanted], dtype=np.int64
        )


def sample_id_for(index: int) -> str:
    """Sample id of row `index`; zero padding keeps id order equal to row order."""
    return f"s{index:07d}"


class TrainConfig(BaseModel):
    """Optimization settings of the toy trainer."""

    model_config = ConfigDict(extra="forbid")

    scheme: Scheme = "semantic_softmax"
    kd: KDMode = "off"
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=0.01, gt=0.0)
    optimizer: Literal["sgd", "adam"] = "adam"
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=0.0, ge=0.0)
    decoupled_weight_decay: bool = False
    weight_mode: WeightMode = "empirical"
    smoothing: float = Field(default=0.2, ge=0.0, lt=1.0)
    gamma_pos: float = Field(default=0.0, ge=0.0)
    gamma_neg: float = Field(default=4.0, ge=0.0)
    lambda_kd: float = Field(default=1.0, ge=0.0)
    kd_distance: Literal["mse", "kl"] = "mse"
    kd_normalization: Literal["mean", "sum"] = "mean"
    strict_confidence: bool = False
    task_loss: bool = True
    eval_split: Literal["val", "train"] = "val"
    seed: int = 0


class EpochRecord(BaseModel):
    """One line of the training trace."""

    model_config = ConfigDict(frozen=True)

    epoch: int
    loss: float
    per_hierarchy_top1: list[float]
    weighted_total: float
    teacher_confidence: Optional[list[float]] = None


class ComparisonRow(BaseModel):
    """Final metrics of one trained scheme."""

    model_config = ConfigDict(frozen=True)

    scheme: str
    weighted_total: float
    per_hierarchy: list[float]


# Run configuration
class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    taxonomy: Optional[str] = None  # None selects the built-in 2/6/18 taxonomy
    output_dir: str = "runs"
    model: Optional[str] = None
    teacher: Optional[str] = None  # KD teacher weights; trained on the fly when absent


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples_per_leaf: int = Field(default=50, ge=1)
    feature_dim: int = Field(default=32, ge=1)
    cluster_spread: float = Field(default=0.1, gt=0.0)
    label_truncation_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    val_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    dag_policy: DagPolicy = "min_depth_parent"


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hidden_width: Optional[int] = Field(default=None, ge=1)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    metrics: list[Literal["top1", "top5", "semantic", "map"]] = Field(
        default_factory=lambda: ["top1", "top5", "semantic", "map"]
    )
    split: Literal["val", "train"] = "val"


class RunConfig(BaseModel):
    """Everything one CLI run needs; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    paths: PathsConfig = Field(default_factory=PathsConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
