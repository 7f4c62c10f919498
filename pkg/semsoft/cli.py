"""
Command-line front door: preprocess, expand labels, train, evaluate, compare.

Exit codes: 0 on success, 1 on usage or config errors, 2 on data errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence, get_args

from dotenv import load_dotenv

from semsoft.config import default_seed, flatten, load_run_config
from semsoft.dataset_prep import (
    filter_infrequent,
    load_manifest,
    make_val_split,
    read_pixel_buffer,
    save_manifest,
    squish_resize,
    write_pixel_buffer,
)
from semsoft.errors import SemsoftError, UsageError
from semsoft.gradcheck import run_gradient_suite
from semsoft.losses.weights import compute_hierarchy_weights, save_weights
from semsoft.metrics import map_scores, semantic_accuracy, top_k_accuracy
from semsoft.models import (
    KDMode,
    PredictionBatch,
    RunConfig,
    SyntheticDataset,
    SyntheticDatasetSpec,
)
from semsoft.synthetic import default_synthetic_taxonomy, generate_synthetic_dataset
from semsoft.taxonomy import (
    expand_label,
    hierarchy_examples,
    label_names,
    load_taxonomy_tsv,
    multi_hot,
    taxonomy_stats,
)
from semsoft.toy_model import ToyModel
from semsoft.trainer import (
    SCHEME_ALIASES,
    compare_schemes,
    comparison_to_csv,
    parse_run_name,
    trace_to_jsonl,
    train,
    write_text,
)

logger = logging.getLogger(__name__)

METRICS = ("top1", "top5", "semantic", "map")
WEIGHT_MODES = ("empirical", "class_mass", "as_printed", "uniform")
DAG_POLICIES = ("min_depth_parent", "reject")
KD_MODES = get_args(KDMode)


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def write_sidecar(artifact: str | Path, command: str, config: dict[str, Any], seed: int) -> Path:
    """Write `<artifact>.meta.json` with the effective config and seed."""
    path = Path(f"{artifact}.meta.json")
    payload = {"artifact": Path(artifact).name, "command": command, "config": config, "seed": seed}
    write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _split_list(raw: str, allowed: Sequence[str], flag: str) -> list[str]:
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise UsageError(f"{flag}: expected a comma-separated list")
    for item in items:
        if item not in allowed:
            raise UsageError(f"{flag}: unknown value '{item}' (choose from {', '.join(allowed)})")
    return items


def _build_dataset(config: RunConfig) -> SyntheticDataset:
    if config.paths.taxonomy:
        taxonomy = load_taxonomy_tsv(config.paths.taxonomy, config.data.dag_policy)
    else:
        taxonomy = default_synthetic_taxonomy()
    spec = SyntheticDatasetSpec(
        taxonomy=taxonomy,
        samples_per_leaf=config.data.samples_per_leaf,
        feature_dim=config.data.feature_dim,
        cluster_spread=config.data.cluster_spread,
        label_truncation_prob=config.data.label_truncation_prob,
        val_fraction=config.data.val_fraction,
        seed=config.train.seed,
    )
    return generate_synthetic_dataset(spec)


def _new_model(config: RunConfig, data: SyntheticDataset) -> ToyModel:
    return ToyModel.initialize(
        data.features.shape[1],
        data.taxonomy.num_classes,
        config.model.hidden_width,
        seed=config.train.seed,
    )


def _teacher_for(
    config: RunConfig, data: SyntheticDataset, required: bool = False
) -> Optional[ToyModel]:
    if config.train.kd == "off" and not required:
        return None
    if config.paths.teacher:
        logger.info(f"Loading KD teacher from {config.paths.teacher}")
        return ToyModel.load(config.paths.teacher)
    logger.info("No teacher weights given, training one without KD")
    teacher = _new_model(config, data)
    train(teacher, data, config.train.model_copy(update={"kd": "off"}))
    return teacher


def _output_dir(config: RunConfig) -> Path:
    out = Path(config.paths.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(args.config, args.set, args.seed)


# Subcommands
def cmd_taxonomy_stats(args: argparse.Namespace) -> int:
    t = load_taxonomy_tsv(args.tsv, args.dag_policy)
    examples = hierarchy_examples(t, args.examples) if args.examples else None
    for k, count in enumerate(taxonomy_stats(t)):
        line = f"hierarchy {k}: {count} classes"
        if examples is not None:
            line += f"  ({', '.join(examples[k])})"
        print(line)
    print(f"total: {t.num_classes} classes in {t.num_hierarchies} hierarchies")
    return 0


def cmd_prep_filter(args: argparse.Namespace) -> int:
    if args.min < 1:
        raise UsageError(f"--min must be >= 1, got {args.min}")
    filtered = filter_infrequent(load_manifest(args.manifest), args.min)
    save_manifest(filtered, args.out)
    write_sidecar(
        args.out, "prep filter", {"manifest": args.manifest, "min": args.min}, default_seed()
    )
    print(f"{len(filtered)} records written to {args.out}")
    return 0


def cmd_prep_split(args: argparse.Namespace) -> int:
    if args.per_class < 0:
        raise UsageError(f"--per-class must be >= 0, got {args.per_class}")
    seed = args.seed if args.seed is not None else default_seed()
    split = make_val_split(load_manifest(args.manifest), args.per_class, seed)
    save_manifest(split, args.out)
    write_sidecar(
        args.out, "prep split", {"manifest": args.manifest, "per_class": args.per_class}, seed
    )
    num_val = sum(1 for r in split.records if r.split == "val")
    print(f"{num_val} val / {len(split) - num_val} train records written to {args.out}")
    return 0


def cmd_prep_resize(args: argparse.Namespace) -> int:
    if args.size < 1:
        raise UsageError(f"--size must be >= 1, got {args.size}")
    resized = squish_resize(read_pixel_buffer(args.input), args.size)
    write_pixel_buffer(resized, args.output)
    write_sidecar(
        args.output, "prep resize", {"input": args.input, "size": args.size}, default_seed()
    )
    return 0


def cmd_labels_expand(args: argparse.Namespace) -> int:
    t = load_taxonomy_tsv(args.tsv, args.dag_policy)
    print(", ".join(label_names(t, args.class_id)))
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    t = load_taxonomy_tsv(args.tsv, args.dag_policy)
    manifest = load_manifest(args.manifest) if args.manifest else None
    if args.mode == "empirical" and manifest is None:
        raise UsageError("--manifest is required with --mode empirical")
    weights = compute_hierarchy_weights(t, manifest, args.mode)
    print(json.dumps(weights.model_dump()))
    if args.out:
        save_weights(weights, args.out)
        config = {"tsv": args.tsv, "manifest": args.manifest, "mode": args.mode}
        write_sidecar(args.out, "weights", config, default_seed())
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _run_config(args)
    data = _build_dataset(config)
    model = _new_model(config, data)
    result = train(model, data, config.train, teacher=_teacher_for(config, data))

    out = _output_dir(config)
    trace_path = out / "trace.jsonl"
    model_path = Path(config.paths.model) if config.paths.model else out / "model.npz"
    write_text(trace_path, trace_to_jsonl(result.trace))
    result.model.save(model_path)
    for artifact in (trace_path, model_path):
        write_sidecar(artifact, "train", flatten(config), config.train.seed)

    if result.trace:
        last = result.trace[-1]
        print(f"epoch {last.epoch}: loss={last.loss:.6f} weighted_total={last.weighted_total:.4f}")
    print(f"trace written to {trace_path}, model to {model_path}")
    return 0


def evaluate_metrics(
    model: ToyModel, data: SyntheticDataset, split: str, metrics: list[str]
) -> dict[str, Any]:
    """Requested metrics of `model` on one split of `data`, against the recorded labels."""
    t = data.taxonomy
    rows = data.split_indices(split)  # type: ignore[arg-type]
    logits, _ = model.forward(data.features[rows])
    class_ids = [data.class_ids[int(i)] for i in rows]

    report: dict[str, Any] = {"split": split, "num_samples": len(rows)}
    indices = [t.global_index(c) for c in class_ids]
    if "top1" in metrics:
        report["top1"] = top_k_accuracy(PredictionBatch(logits=logits, labels=indices), 1)
    if "top5" in metrics:
        report["top5"] = top_k_accuracy(PredictionBatch(logits=logits, labels=indices), 5)
    if "semantic" in metrics:
        labels = [expand_label(t, c) for c in class_ids]
        report["semantic"] = semantic_accuracy(
            PredictionBatch(logits=logits, labels=labels), t
        ).model_dump()
    if "map" in metrics:
        targets = [multi_hot(t, c) for c in class_ids]
        report["map"] = map_scores(PredictionBatch(logits=logits, labels=targets)).model_dump()
    return report


def cmd_eval(args: argparse.Namespace) -> int:
    config = _run_config(args)
    metrics = (
        _split_list(args.metrics, METRICS, "--metrics") if args.metrics else config.eval.metrics
    )
    out = _output_dir(config)
    model_path = Path(config.paths.model) if config.paths.model else out / "model.npz"
    model = ToyModel.load(model_path)
    data = _build_dataset(config)

    report = evaluate_metrics(model, data, config.eval.split, list(metrics))
    report_path = out / "eval.json"
    write_text(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_sidecar(report_path, "eval", flatten(config), config.train.seed)
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = _run_config(args)
    names = list(SCHEME_ALIASES) + list(SCHEME_ALIASES.values())
    allowed = names + [f"{name}:{kd}" for name in names for kd in KD_MODES]
    schemes = _split_list(args.schemes, allowed, "--schemes")
    kd_modes = [parse_run_name(name, config.train.kd)[1] for name in schemes]
    weight_modes = (
        _split_list(args.weight_modes, WEIGHT_MODES, "--weight-modes") if args.weight_modes else []
    )
    data = _build_dataset(config)
    rows = compare_schemes(
        data,
        config.train,
        schemes,
        hidden_width=config.model.hidden_width,
        weight_modes=weight_modes,  # type: ignore[arg-type]
        teacher=_teacher_for(config, data, required=any(kd != "off" for kd in kd_modes)),
    )

    csv_path = _output_dir(config) / "comparison.csv"
    text = comparison_to_csv(rows)
    write_text(csv_path, text)
    write_sidecar(csv_path, "compare", flatten(config), config.train.seed)
    print(text, end="")
    return 0


def cmd_grad_check(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    worst = run_gradient_suite(args.instances, seed)
    failed = False
    for name, error in worst.items():
        status = "ok" if error < args.tolerance else "FAIL"
        failed = failed or status == "FAIL"
        print(f"{name:<22} {error:.3e} {status}")
    return 2 if failed else 0


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="semsoft", description="Semantic softmax pretraining toolkit.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def add_dag_policy(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--dag-policy",
            choices=DAG_POLICIES,
            default="min_depth_parent",
            help="how to resolve classes with several parents",
        )

    def add_run_options(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", help="flat JSON config with dotted keys")
        sub.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        sub.add_argument("--seed", type=int, help="overrides train.seed and SEMSOFT_SEED")

    taxonomy = commands.add_parser("taxonomy", help="inspect a taxonomy").add_subparsers(
        dest="action", required=True, parser_class=ArgumentParser
    )
    stats = taxonomy.add_parser("stats", help="per-hierarchy class counts")
    stats.add_argument("tsv", help="class_id<TAB>parent_id<TAB>name file")
    stats.add_argument("--examples", type=int, default=0, help="class names shown per hierarchy")
    add_dag_policy(stats)
    stats.set_defaults(handler=cmd_taxonomy_stats)

    prep = commands.add_parser("prep", help="preprocess manifests and images").add_subparsers(
        dest="action", required=True, parser_class=ArgumentParser
    )
    flt = prep.add_parser("filter", help="drop classes with too few records")
    flt.add_argument("manifest", help="JSONL manifest")
    flt.add_argument("--min", type=int, default=500, help="minimum records per class")
    flt.add_argument("--out", required=True, help="output manifest")
    flt.set_defaults(handler=cmd_prep_filter)

    split = prep.add_parser("split", help="assign a fixed number of val records per class")
    split.add_argument("manifest", help="JSONL manifest")
    split.add_argument("--per-class", type=int, default=50, help="val records per class")
    split.add_argument("--seed", type=int, help="split seed (default SEMSOFT_SEED or 0)")
    split.add_argument("--out", required=True, help="output manifest")
    split.set_defaults(handler=cmd_prep_split)

    resize = prep.add_parser("resize", help="squish-resize a pixel buffer file")
    resize.add_argument("input", help="input pixel buffer")
    resize.add_argument("output", help="output pixel buffer")
    resize.add_argument("--size", type=int, default=224, help="output width and height")
    resize.set_defaults(handler=cmd_prep_resize)

    labels = commands.add_parser("labels", help="semantic label tools").add_subparsers(
        dest="action", required=True, parser_class=ArgumentParser
    )
    expand = labels.add_parser("expand", help="print the ancestor chain of a class")
    expand.add_argument("tsv", help="taxonomy TSV")
    expand.add_argument("class_id", help="class to expand")
    add_dag_policy(expand)
    expand.set_defaults(handler=cmd_labels_expand)

    weights = commands.add_parser("weights", help="per-hierarchy loss weights")
    weights.add_argument("tsv", help="taxonomy TSV")
    weights.add_argument("--mode", choices=WEIGHT_MODES, default="empirical")
    weights.add_argument("--manifest", help="JSONL manifest (needed for empirical)")
    weights.add_argument("--out", help="write {mode, O, W} JSON here")
    add_dag_policy(weights)
    weights.set_defaults(handler=cmd_weights)

    train_cmd = commands.add_parser("train", help="train the toy model")
    add_run_options(train_cmd)
    train_cmd.set_defaults(handler=cmd_train)

    eval_cmd = commands.add_parser("eval", help="evaluate a trained toy model")
    add_run_options(eval_cmd)
    eval_cmd.add_argument("--metrics", help=f"comma-separated subset of {','.join(METRICS)}")
    eval_cmd.set_defaults(handler=cmd_eval)

    compare = commands.add_parser("compare", help="train several schemes and tabulate them")
    add_run_options(compare)
    compare.add_argument(
        "--schemes",
        default="single,multi,semantic",
        help="comma-separated schemes, each optionally suffixed with :<kd mode>",
    )
    compare.add_argument("--weight-modes", help="extra semantic_softmax rows, one per mode")
    compare.set_defaults(handler=cmd_compare)

    grad = commands.add_parser("grad-check", help="finite-difference check of every loss")
    grad.add_argument("--instances", type=int, default=100, help="random draws per loss")
    grad.add_argument("--seed", type=int, help="draw seed (default SEMSOFT_SEED or 0)")
    grad.add_argument("--tolerance", type=float, default=1e-4, help="max relative error")
    grad.set_defaults(handler=cmd_grad_check)

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse `argv` and run one subcommand.

    Returns:
        Process exit code
    """
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.handler(args)
    except SemsoftError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    """Console entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print("\n\nInterrupted.")
        sys.exit(1)
