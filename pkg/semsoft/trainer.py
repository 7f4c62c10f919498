"""
Desk-scale training harness: mini-batch gradient descent of a ToyModel under
any loss scheme, optional semantic or regular KD, scheme comparison and
sample-count sweeps.
"""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, get_args

import numpy as np

from semsoft.errors import ManifestIOError, NonFiniteLoss, ShapeMismatch
from semsoft.losses.distillation import (
    build_teacher_output,
    combined_objective,
    regular_kd_loss,
    semantic_kd_loss,
)
from semsoft.losses.multi_label import multi_label_binary_loss
from semsoft.losses.semantic_softmax import semantic_softmax_loss
from semsoft.losses.single_label import single_label_ce
from semsoft.losses.weights import compute_hierarchy_weights
from semsoft.metrics import semantic_accuracy
from semsoft.models import (
    BinaryLossConfig,
    ComparisonRow,
    DatasetManifest,
    EpochRecord,
    HierarchyWeights,
    KDMode,
    LossResult,
    PredictionBatch,
    SemanticAccuracyReport,
    SemanticLabel,
    SyntheticDataset,
    Taxonomy,
    TrainConfig,
    WeightMode,
    sample_id_for,
)
from semsoft.optimizers import make_optimizer
from semsoft.taxonomy import expand_label, multi_hot
from semsoft.toy_model import ToyModel

logger = logging.getLogger(__name__)

SCHEME_ALIASES = {
    "single": "single_label",
    "multi": "multi_label",
    "semantic": "semantic_softmax",
}


@dataclass(frozen=True)
class SampleTargets:
    """Every form of ground truth the schemes need for one sample."""

    index: int
    label: SemanticLabel
    multi_hot: np.ndarray


@dataclass
class TrainResult:
    model: ToyModel
    trace: list[EpochRecord]


def prepare_targets(t: Taxonomy, class_ids: list[str]) -> list[SampleTargets]:
    cache: dict[str, SampleTargets] = {}
    for class_id in set(class_ids):
        cache[class_id] = SampleTargets(
            index=t.global_index(class_id),
            label=expand_label(t, class_id),
            multi_hot=multi_hot(t, class_id),
        )
    return [cache[c] for c in class_ids]


def sample_objective(
    logits: np.ndarray,
    target: SampleTargets,
    cfg: TrainConfig,
    t: Taxonomy,
    weights: Optional[HierarchyWeights] = None,
    teacher_logits: Optional[np.ndarray] = None,
) -> tuple[LossResult, Optional[list[float]]]:
    """
    Training objective of one sample: task loss, plus lambda * KD when a
    teacher is given. Returns the loss and the teacher confidences used, which
    are None without KD and for regular KD.
    """
    if not cfg.task_loss:
        task = LossResult(
            total=0.0, per_hierarchy=[0.0] * t.num_hierarchies, grad=np.zeros_like(logits)
        )
    elif cfg.scheme == "single_label":
        task = single_label_ce(logits, target.index, cfg.smoothing)
    elif cfg.scheme == "multi_label":
        binary_cfg = BinaryLossConfig(gamma_pos=cfg.gamma_pos, gamma_neg=cfg.gamma_neg)
        task = multi_label_binary_loss(logits, target.multi_hot, binary_cfg, t)
    else:
        if weights is None:
            raise ValueError("semantic_softmax needs hierarchy weights")
        task = semantic_softmax_loss(logits, target.label, weights, t, cfg.smoothing)

    if teacher_logits is None or cfg.kd == "off":
        return task, None

    if cfg.kd == "regular":
        kd = regular_kd_loss(logits, teacher_logits, cfg.kd_normalization, cfg.kd_distance)
        return combined_objective(task, kd, cfg.lambda_kd), None

    teacher = build_teacher_output(teacher_logits, target.label, t, strict=cfg.strict_confidence)
    kd = semantic_kd_loss(
        logits,
        teacher,
        target.label,
        t,
        weighted=cfg.kd == "confidence_weighted",
        normalization=cfg.kd_normalization,
        distance=cfg.kd_distance,
    )
    return combined_objective(task, kd, cfg.lambda_kd), teacher.confidences


def batch_objective(
    logits: np.ndarray,
    targets: list[SampleTargets],
    cfg: TrainConfig,
    t: Taxonomy,
    weights: Optional[HierarchyWeights] = None,
    teacher_logits: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Mean objective over a batch.

    Returns:
        (loss, d loss / d logits with the batch's shape, summed teacher confidences)
    """
    batch_size = logits.shape[0]
    grad = np.zeros_like(logits)
    confidence_sum = np.zeros(t.num_hierarchies)
    total = 0.0
    for row in range(batch_size):
        result, confidences = sample_objective(
            logits[row],
            targets[row],
            cfg,
            t,
            weights,
            None if teacher_logits is None else teacher_logits[row],
        )
        total += result.total
        grad[row] = result.grad
        if confidences is not None:
            confidence_sum += confidences
    return total / batch_size, grad / batch_size, confidence_sum


def _training_manifest(data: SyntheticDataset, indices: np.ndarray) -> DatasetManifest:
    wanted = {sample_id_for(int(i)) for i in indices}
    return DatasetManifest(
        records=tuple(r for r in data.manifest.records if r.sample_id in wanted)
    )


def evaluate(
    model: ToyModel, data: SyntheticDataset, indices: np.ndarray
) -> SemanticAccuracyReport:
    """Semantic accuracy of `model` on the given rows, against their recorded labels."""
    t = data.taxonomy
    logits, _ = model.forward(data.features[indices])
    labels = [expand_label(t, data.class_ids[int(i)]) for i in indices]
    return semantic_accuracy(PredictionBatch(logits=logits, labels=labels), t)


def train(
    model: ToyModel,
    data: SyntheticDataset,
    cfg: TrainConfig,
    teacher: Optional[ToyModel] = None,
    train_indices: Optional[np.ndarray] = None,
) -> TrainResult:
    """
    Mini-batch training with the analytic gradients of the loss schemes.

    Each epoch visits the training rows in a seeded permutation. After the
    epoch, the trace records the mean objective over the training rows and the
    semantic accuracy on `cfg.eval_split`.

    Args:
        model: Model to update in place
        data: Synthetic dataset
        cfg: Training configuration
        teacher: Teacher model, required iff cfg.kd != "off"
        train_indices: Rows to train on (default: the train split)

    Raises:
        ShapeMismatch: If data, model and teacher dimensions disagree
        NonFiniteLoss: If a batch loss is NaN or infinite
    """
    t = data.taxonomy
    if data.features.shape[1] != model.feature_dim:
        raise ShapeMismatch(
            f"data has {data.features.shape[1]} features, model expects {model.feature_dim}"
        )
    if model.num_outputs != t.num_classes:
        raise ShapeMismatch(f"model has {model.num_outputs} outputs, taxonomy {t.num_classes}")
    if (cfg.kd != "off") != (teacher is not None):
        raise ShapeMismatch("a teacher is required exactly when kd is enabled")
    if teacher is not None and (
        teacher.feature_dim != model.feature_dim or teacher.num_outputs != model.num_outputs
    ):
        raise ShapeMismatch("teacher and student dimensions differ")

    trace: list[EpochRecord] = []
    if cfg.epochs == 0:
        return TrainResult(model=model, trace=trace)

    rows = data.split_indices("train") if train_indices is None else np.asarray(train_indices)
    eval_rows = rows if cfg.eval_split == "train" else data.split_indices("val")
    targets = prepare_targets(t, data.class_ids)
    weights = None
    if cfg.scheme == "semantic_softmax":
        weights = compute_hierarchy_weights(t, _training_manifest(data, rows), cfg.weight_mode)

    reports_confidence = teacher is not None and cfg.kd != "regular"
    optimizer = make_optimizer(cfg)
    rng = np.random.default_rng(cfg.seed)

    def objective(
        batch_rows: np.ndarray, epoch: int, batch: int, phase: str
    ) -> tuple[float, np.ndarray, np.ndarray, dict]:
        x = data.features[batch_rows]
        logits, cache = model.forward(x)
        if not np.all(np.isfinite(logits)):
            raise NonFiniteLoss(epoch, batch, float("nan"), phase)
        teacher_logits = teacher.forward(x)[0] if teacher is not None else None
        loss, dlogits, confidence = batch_objective(
            logits, [targets[int(i)] for i in batch_rows], cfg, t, weights, teacher_logits
        )
        if not np.isfinite(loss):
            raise NonFiniteLoss(epoch, batch, loss, phase)
        return loss, dlogits, confidence, cache

    for epoch in range(cfg.epochs):
        order = rng.permutation(rows)
        for batch, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch_rows = order[start:start + cfg.batch_size]
            _, dlogits, _, cache = objective(batch_rows, epoch, batch, "train")
            optimizer.step(model.params, model.backward(cache, dlogits))

        total = 0.0
        confidence_sum = np.zeros(t.num_hierarchies)
        for batch, start in enumerate(range(0, len(rows), cfg.batch_size)):
            batch_rows = rows[start:start + cfg.batch_size]
            loss, _, confidence, _ = objective(batch_rows, epoch, batch, "eval")
            total += loss * len(batch_rows)
            confidence_sum += confidence
        report = evaluate(model, data, eval_rows)
        record = EpochRecord(
            epoch=epoch,
            loss=total / max(len(rows), 1),
            per_hierarchy_top1=[h.accuracy for h in report.per_hierarchy_top1],
            weighted_total=report.weighted_total,
            teacher_confidence=(
                (confidence_sum / max(len(rows), 1)).tolist() if reports_confidence else None
            ),
        )
        trace.append(record)
        logger.info(
            f"epoch {epoch}: loss={record.loss:.5f} weighted_total={record.weighted_total:.4f}"
        )

    return TrainResult(model=model, trace=trace)


def _resolve_scheme(name: str) -> str:
    return SCHEME_ALIASES.get(name, name)


def parse_run_name(name: str, default_kd: KDMode) -> tuple[str, KDMode, str]:
    """
    Split a comparison entry "scheme" or "scheme:kd" into (scheme, kd, row label).

    Without a KD suffix the run uses `default_kd` and is labelled by its scheme;
    with one it is labelled "<scheme>+<kd>_kd", e.g. "single_label+regular_kd".
    """
    scheme_name, _, kd_name = name.partition(":")
    scheme = _resolve_scheme(scheme_name)
    if not kd_name:
        return scheme, default_kd, scheme
    if kd_name not in get_args(KDMode):
        raise ValueError(f"unknown kd mode '{kd_name}' in '{name}'")
    return scheme, kd_name, f"{scheme}+{kd_name}_kd"  # type: ignore[return-value]


def compare_schemes(
    data: SyntheticDataset,
    base_cfg: TrainConfig,
    schemes: list[str],
    hidden_width: Optional[int] = None,
    weight_modes: Optional[list[WeightMode]] = None,
    teacher: Optional[ToyModel] = None,
) -> list[ComparisonRow]:
    """
    Train every scheme from the same seeded initialization on the same data.

    Args:
        data: Synthetic dataset
        base_cfg: Shared configuration; its scheme field is overridden per row
        schemes: Scheme names ("single", "multi", "semantic" or full names),
            optionally with a KD mode suffix such as "single:regular"
        hidden_width: Optional hidden layer width of the toy model
        weight_modes: Extra semantic_softmax rows, one per weight mode
        teacher: Teacher for KD runs; only passed to runs whose kd is not "off"

    Returns:
        One row per run with val-split semantic accuracies
    """
    if not schemes:
        raise ValueError("schemes must not be empty")

    runs: list[tuple[str, TrainConfig]] = []
    for name in schemes:
        scheme, kd, label = parse_run_name(name, base_cfg.kd)
        cfg = TrainConfig.model_validate({**base_cfg.model_dump(), "scheme": scheme, "kd": kd})
        runs.append((label, cfg))
    for mode in weight_modes or []:
        cfg = TrainConfig.model_validate(
            {**base_cfg.model_dump(), "scheme": "semantic_softmax", "weight_mode": mode}
        )
        runs.append((f"semantic_softmax[{mode}]", cfg))

    rows: list[ComparisonRow] = []
    val_rows = data.split_indices("val")
    for label, cfg in runs:
        model = ToyModel.initialize(
            data.features.shape[1], data.taxonomy.num_classes, hidden_width, seed=cfg.seed
        )
        if cfg.kd != "off" and teacher is None:
            raise ValueError(f"run '{label}' uses kd={cfg.kd} but no teacher was given")
        train(model, data, cfg, teacher=teacher if cfg.kd != "off" else None)
        report = evaluate(model, data, val_rows)
        rows.append(
            ComparisonRow(
                scheme=label,
                weighted_total=report.weighted_total,
                per_hierarchy=[h.accuracy for h in report.per_hierarchy_top1],
            )
        )
        logger.info(f"{label}: weighted_total={report.weighted_total:.4f}")
    return rows


def sample_count_sweep(
    data: SyntheticDataset,
    base_cfg: TrainConfig,
    counts: list[int],
    scheme: str = "semantic_softmax",
    hidden_width: Optional[int] = None,
) -> list[tuple[int, float]]:
    """
    Train on nested prefixes of a seeded permutation of the train split and
    report the val-split weighted total for each training-set size.
    """
    train_rows = data.split_indices("train")
    if max(counts) > len(train_rows):
        raise ValueError(f"largest count {max(counts)} exceeds {len(train_rows)} train samples")

    permuted = np.random.default_rng(base_cfg.seed).permutation(train_rows)
    cfg = base_cfg.model_copy(update={"scheme": _resolve_scheme(scheme)})
    val_rows = data.split_indices("val")
    results: list[tuple[int, float]] = []
    for count in counts:
        model = ToyModel.initialize(
            data.features.shape[1], data.taxonomy.num_classes, hidden_width, seed=cfg.seed
        )
        train(model, data, cfg, train_indices=np.sort(permuted[:count]))
        results.append((count, evaluate(model, data, val_rows).weighted_total))
        logger.info(f"{count} samples: weighted_total={results[-1][1]:.4f}")
    return results


def trace_to_jsonl(trace: list[EpochRecord]) -> str:
    return "".join(record.model_dump_json(exclude_none=True) + "\n" for record in trace)


def comparison_to_csv(rows: list[ComparisonRow]) -> str:
    """CSV with header scheme,weighted_total,h0,...,h{K-1}."""
    num_hierarchies = max((len(r.per_hierarchy) for r in rows), default=0)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["scheme", "weighted_total"] + [f"h{k}" for k in range(num_hierarchies)])
    for row in rows:
        writer.writerow(
            [row.scheme, f"{row.weighted_total:.6f}"] + [f"{a:.6f}" for a in row.per_hierarchy]
        )
    return buffer.getvalue()


def write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise ManifestIOError(path, str(e)) from e
