"""
Tests for the command-line front door.
"""

import json

import numpy as np
import pytest

from semsoft.cli import dispatch
from semsoft.config import SEED_ENV_VAR
from semsoft.dataset_prep import load_manifest, read_pixel_buffer, write_pixel_buffer
from semsoft.models import PixelBuffer
from tests.helpers import COW_ROWS, write_manifest, write_tsv


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture
def tax(tmp_path):
    return str(write_tsv(tmp_path / "tax.tsv", COW_ROWS))


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "paths.output_dir": str(tmp_path / "runs"),
                "data.samples_per_leaf": 6,
                "data.feature_dim": 8,
                "train.epochs": 2,
                "train.batch_size": 16,
            }
        )
    )
    return str(path)


def test_labels_expand(tax, capsys):
    """Test the swan chain is printed by name."""
    assert dispatch(["labels", "expand", tax, "swan"]) == 0
    assert capsys.readouterr().out == "animal, vertebrate, bird, aquatic bird, swan\n"


def test_taxonomy_stats(tax, capsys):
    """Test per-hierarchy counts with example names."""
    assert dispatch(["taxonomy", "stats", tax, "--examples", "2"]) == 0

    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("hierarchy 0: 1 classes")
    assert out[2] == "hierarchy 2: 2 classes  (bird, mammal)"
    assert out[-1] == "total: 8 classes in 5 hierarchies"


def test_prep_filter_min_one_is_identity(tmp_path):
    """Test --min 1 keeps every record and writes a sidecar."""
    source = write_manifest(tmp_path / "m.jsonl", {"a": 3, "b": 2})
    out = tmp_path / "out.jsonl"

    assert dispatch(["prep", "filter", str(source), "--min", "1", "--out", str(out)]) == 0
    assert load_manifest(out).records == load_manifest(source).records
    sidecar = json.loads((tmp_path / "out.jsonl.meta.json").read_text())
    assert sidecar["command"] == "prep filter"
    assert sidecar["config"]["min"] == 1
    assert sidecar["seed"] == 0


def test_prep_split(tmp_path):
    """Test the split command assigns per-class val records with the given seed."""
    source = write_manifest(tmp_path / "m.jsonl", {"a": 60, "b": 55})
    out = tmp_path / "split.jsonl"

    args = ["prep", "split", str(source), "--per-class", "50", "--seed", "3", "--out", str(out)]
    assert dispatch(args) == 0
    records = load_manifest(out).records
    assert sum(r.split == "val" for r in records) == 100
    assert json.loads((tmp_path / "split.jsonl.meta.json").read_text())["seed"] == 3


def test_prep_split_class_too_small(tmp_path, capsys):
    """Test a data error exits with 2."""
    source = write_manifest(tmp_path / "m.jsonl", {"a": 10})

    args = ["prep", "split", str(source), "--per-class", "50", "--out", str(tmp_path / "o")]
    assert dispatch(args) == 2
    assert "Class 'a'" in capsys.readouterr().err


def test_prep_resize(tmp_path):
    """Test resizing a pixel buffer file."""
    source = tmp_path / "in.bin"
    write_pixel_buffer(PixelBuffer.from_array(np.full((3, 5, 3), 0.25)), source)
    out = tmp_path / "out.bin"

    assert dispatch(["prep", "resize", str(source), str(out), "--size", "16"]) == 0
    resized = read_pixel_buffer(out)
    assert (resized.width, resized.height) == (16, 16)
    assert np.all(resized.data == 0.25)


def test_weights(tax, tmp_path, capsys):
    """Test class_mass weights are printed and saved."""
    out = tmp_path / "w.json"

    assert dispatch(["weights", tax, "--mode", "class_mass", "--out", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["O"] == [8.0, 7.0, 6.0, 4.0, 2.0]
    assert json.loads(out.read_text()) == printed
    assert (tmp_path / "w.json.meta.json").exists()


def test_weights_empirical_needs_manifest(tax):
    """Test empirical mode without a manifest is a usage error."""
    assert dispatch(["weights", tax, "--mode", "empirical"]) == 1


def test_usage_errors(capsys):
    """Test bad flags and commands exit with 1 and name the flag."""
    assert dispatch(["prep", "filter", "m.jsonl", "--min", "many", "--out", "o"]) == 1
    assert "--min" in capsys.readouterr().err

    assert dispatch(["bogus"]) == 1
    assert dispatch([]) == 1
    assert dispatch(["weights", "tax.tsv", "--mode", "nonsense"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["taxonomy", "stats"],
        ["prep", "filter"],
        ["prep", "split"],
        ["prep", "resize"],
        ["labels", "expand"],
        ["weights"],
        ["train"],
        ["eval"],
        ["compare"],
        ["grad-check"],
    ],
)
def test_help_exits_zero(argv, capsys):
    """Test --help on every subcommand."""
    assert dispatch(argv + ["--help"]) == 0
    assert "usage:" in capsys.readouterr().out


def test_missing_taxonomy_is_data_error(tmp_path):
    """Test an unreadable taxonomy exits with 2."""
    assert dispatch(["labels", "expand", str(tmp_path / "absent.tsv"), "swan"]) == 2


def test_comment_only_taxonomy_is_data_error(tmp_path, capsys):
    """Test a TSV without class rows exits with 2."""
    path = tmp_path / "empty.tsv"
    path.write_text("# only a comment\n", encoding="utf-8")

    assert dispatch(["taxonomy", "stats", str(path)]) == 2
    assert "empty" in capsys.readouterr().err


def test_unknown_class_is_data_error(tax):
    """Test expanding a class that is not listed."""
    assert dispatch(["labels", "expand", tax, "goose"]) == 2


def test_train_then_eval(run_config, tmp_path, capsys):
    """Test train writes trace, model and sidecars and eval reads the model."""
    assert dispatch(["train", "--config", run_config, "--seed", "4"]) == 0
    runs = tmp_path / "runs"
    trace = (runs / "trace.jsonl").read_text().splitlines()
    assert len(trace) == 2
    assert (runs / "model.npz").exists()
    sidecar = json.loads((runs / "trace.jsonl.meta.json").read_text())
    assert sidecar["seed"] == 4
    assert sidecar["config"]["train.epochs"] == 2
    assert (runs / "model.npz.meta.json").exists()
    capsys.readouterr()

    args = ["eval", "--config", run_config, "--seed", "4", "--metrics", "top1,semantic,map"]
    assert dispatch(args) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"split", "num_samples", "top1", "semantic", "map"}
    assert 0.0 <= report["top1"] <= 1.0
    assert set(report["map"]) == {"micro_map", "macro_map"}
    assert (runs / "eval.json.meta.json").exists()


def test_train_with_distillation(run_config, tmp_path):
    """Test KD training builds its own teacher when none is given."""
    args = ["train", "--config", run_config, "--set", "train.kd=confidence_weighted"]
    assert dispatch(args) == 0

    first = json.loads((tmp_path / "runs" / "trace.jsonl").read_text().splitlines()[0])
    assert len(first["teacher_confidence"]) == 3


def test_eval_unknown_metric(run_config):
    """Test an unknown metric name."""
    assert dispatch(["eval", "--config", run_config, "--metrics", "top1,recall"]) == 1


def test_eval_without_model(run_config):
    """Test evaluating before training is a data error."""
    assert dispatch(["eval", "--config", run_config]) == 2


def test_config_errors(run_config):
    """Test unknown keys exit with 1."""
    assert dispatch(["train", "--config", run_config, "--set", "train.bogus=1"]) == 1


def test_compare_is_byte_identical(run_config, tmp_path):
    """Test two compare runs with one config give the same CSV."""
    args = ["compare", "--config", run_config, "--schemes", "single,multi,semantic"]
    csv_path = tmp_path / "runs" / "comparison.csv"

    assert dispatch(args) == 0
    first = csv_path.read_bytes()
    first_sidecar = (tmp_path / "runs" / "comparison.csv.meta.json").read_bytes()
    assert dispatch(args) == 0
    assert csv_path.read_bytes() == first
    assert (tmp_path / "runs" / "comparison.csv.meta.json").read_bytes() == first_sidecar
    assert first.decode().splitlines()[0] == "scheme,weighted_total,h0,h1,h2"


def test_compare_regular_and_semantic_distillation(run_config, tmp_path, capsys):
    """Test KD-suffixed schemes train a teacher and get their own rows."""
    schemes = "single:regular,semantic:confidence_weighted"
    assert dispatch(["compare", "--config", run_config, "--schemes", schemes]) == 0

    lines = (tmp_path / "runs" / "comparison.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == [
        "single_label+regular_kd",
        "semantic_softmax+confidence_weighted_kd",
    ]


def test_compare_unknown_scheme(run_config):
    """Test an unknown scheme name."""
    assert dispatch(["compare", "--config", run_config, "--schemes", "single,tree"]) == 1


def test_grad_check(capsys):
    """Test the gradient check passes on a few instances."""
    assert dispatch(["grad-check", "--instances", "5", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "semantic_softmax" in out
    assert "FAIL" not in out


def test_seed_from_environment(run_config, tmp_path, monkeypatch):
    """Test SEMSOFT_SEED is used when no seed is given."""
    monkeypatch.setenv(SEED_ENV_VAR, "11")

    assert dispatch(["train", "--config", run_config]) == 0
    sidecar = json.loads((tmp_path / "runs" / "trace.jsonl.meta.json").read_text())
    assert sidecar["seed"] == 11
