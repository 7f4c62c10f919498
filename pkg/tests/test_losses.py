"""
Tests for the shared softmax numerics, the single-label and the multi-label schemes.
"""

import math

import numpy as np
import pytest

from semsoft.errors import DimensionMismatch, EmptyInput, InvalidTarget
from semsoft.gradcheck import SUITE_ABS_FLOOR, finite_difference_check
from semsoft.losses import multi_label_binary_loss, single_label_ce, split_logits, stable_softmax
from semsoft.models import BinaryLossConfig
from semsoft.taxonomy import parse_taxonomy
from tests.helpers import SWAN_ROWS

BINARY_CONFIGS = [
    BinaryLossConfig.cross_entropy(),
    BinaryLossConfig.focal(),
    BinaryLossConfig.asl(),
]


def _two_level():
    rows = [("a", None, "a"), ("b", None, "b")]
    rows += [("a0", "a", "a0"), ("a1", "a", "a1"), ("b0", "b", "b0")]
    return parse_taxonomy(rows)


def test_softmax_uniform():
    """Test equal logits give a uniform distribution."""
    assert np.allclose(stable_softmax([0.0, 0.0, 0.0]), [1 / 3, 1 / 3, 1 / 3])


def test_softmax_large_logits():
    """Test a huge logit gap stays finite and normalized."""
    p = stable_softmax([1000.0, 0.0])

    assert np.all(np.isfinite(p))
    assert p[0] == 1.0
    assert p.sum() == 1.0


def test_softmax_normalization_and_precision():
    """Test random softmaxes sum to 1 and match an extended-precision oracle."""
    rng = np.random.default_rng(0)
    for _ in range(1000):
        z = rng.normal(scale=5.0, size=int(rng.integers(1, 30)))
        p = stable_softmax(z)
        assert abs(p.sum() - 1.0) < 1e-9

        exp = np.exp(z.astype(np.longdouble) - z.max())
        oracle = exp / exp.sum()
        assert np.max(np.abs(p - oracle.astype(np.float64))) < 1e-12


def test_softmax_empty():
    """Test an empty vector is rejected."""
    with pytest.raises(EmptyInput):
        stable_softmax([])


def test_split_logits_layout():
    """Test groups follow the hierarchy-major layout."""
    t = _two_level()
    groups = split_logits([1.0, 2.0, 3.0, 4.0, 5.0], t)

    assert [g.tolist() for g in groups] == [[1.0, 2.0], [3.0, 4.0, 5.0]]


def test_split_logits_single_hierarchy():
    """Test K=1 gives one group equal to the input."""
    t = parse_taxonomy([("a", None, "a"), ("b", None, "b")])
    groups = split_logits([0.5, -0.5], t)

    assert len(groups) == 1
    assert groups[0].tolist() == [0.5, -0.5]


def test_split_logits_bijection():
    """Test every logit lands once, at its logit_index position."""
    extra = [("goose", "aquatic_bird", "goose"), ("fish", "vertebrate", "fish")]
    t = parse_taxonomy(SWAN_ROWS + extra)
    z = np.arange(t.num_classes, dtype=np.float64)
    groups = split_logits(z, t)

    assert sorted(np.concatenate(groups).tolist()) == z.tolist()
    for class_id, (k, i) in t.logit_index.items():
        assert groups[k][i] == z[t.global_index(class_id)]


def test_split_logits_mismatch():
    """Test a logit vector of the wrong length."""
    with pytest.raises(DimensionMismatch):
        split_logits([1.0, 2.0], _two_level())


def test_single_label_uniform_no_smoothing():
    """Test ln 2 loss and [-0.5, 0.5] gradient on two equal logits."""
    result = single_label_ce([0.0, 0.0], 0, smoothing=0.0)

    assert result.total == pytest.approx(math.log(2))
    assert np.allclose(result.grad, [-0.5, 0.5])


def test_single_label_uniform_with_smoothing():
    """Test smoothing changes the gradient but not the loss at uniform logits."""
    result = single_label_ce([0.0, 0.0], 0, smoothing=0.2)

    assert result.total == pytest.approx(math.log(2))
    assert np.allclose(result.grad, [-0.4, 0.4])
    assert result.per_hierarchy == [result.total]


def test_single_label_errors():
    """Test invalid targets and smoothing."""
    with pytest.raises(InvalidTarget):
        single_label_ce([0.0, 1.0], 2)
    with pytest.raises(InvalidTarget):
        single_label_ce([0.0, 1.0], -1)
    with pytest.raises(ValueError):
        single_label_ce([0.0, 1.0], 0, smoothing=1.0)
    with pytest.raises(EmptyInput):
        single_label_ce([], 0)


def test_single_label_gradient_finite_differences():
    """Test the analytic gradient on random instances."""
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 12))
        target = int(rng.integers(n))
        eps = float(rng.uniform(0.0, 0.5))
        z = rng.normal(scale=2.0, size=n)
        error = finite_difference_check(
            lambda x: single_label_ce(x, target, eps), z, abs_floor=SUITE_ABS_FLOOR
        )
        assert error < 1e-5


def test_binary_cross_entropy_value():
    """Test gamma 0/0 gives ln 2 for a positive at p = 0.5."""
    result = multi_label_binary_loss([0.0], [1.0], BinaryLossConfig.cross_entropy())
    assert result.total == pytest.approx(math.log(2))


def test_asl_negative_value():
    """Test gamma_neg 4 scales the negative term by p^4."""
    result = multi_label_binary_loss([0.0], [0.0], BinaryLossConfig.asl())
    assert result.total == pytest.approx(0.0625 * math.log(2))


def test_default_config_is_asl():
    """Test the default exponents."""
    result = multi_label_binary_loss([0.0], [0.0])
    assert result.metadata == {"gamma_pos": 0.0, "gamma_neg": 4.0}


def test_zero_gammas_match_plain_bce():
    """Test gamma 0/0 equals binary cross-entropy in value and gradient."""
    rng = np.random.default_rng(2)
    for _ in range(100):
        z = rng.uniform(-5.0, 5.0, size=10)
        y = (rng.random(10) < 0.4).astype(np.float64)
        p = 1.0 / (1.0 + np.exp(-z))
        bce = -(y * np.log(p) + (1 - y) * np.log(1 - p)).sum()

        result = multi_label_binary_loss(z, y, BinaryLossConfig.cross_entropy())
        assert abs(result.total - bce) < 1e-12
        assert np.max(np.abs(result.grad - (p - y))) < 1e-12


def test_multi_label_per_hierarchy_breakdown():
    """Test the breakdown sums each hierarchy's terms."""
    t = _two_level()
    z = np.array([0.3, -1.0, 2.0, 0.0, -0.5])
    y = np.array([1.0, 0.0, 0.0, 1.0, 0.0])

    result = multi_label_binary_loss(z, y, BinaryLossConfig.focal(), t)
    assert len(result.per_hierarchy) == 2
    assert sum(result.per_hierarchy) == pytest.approx(result.total)


def test_multi_label_mismatch():
    """Test targets of the wrong length."""
    with pytest.raises(DimensionMismatch):
        multi_label_binary_loss([0.0, 1.0], [1.0])


@pytest.mark.parametrize("cfg", BINARY_CONFIGS, ids=["ce", "focal", "asl"])
def test_multi_label_gradient_finite_differences(cfg):
    """Test the analytic gradient for every focusing configuration."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 10))
        z = rng.normal(scale=2.0, size=n)
        y = (rng.random(n) < 0.5).astype(np.float64)
        error = finite_difference_check(
            lambda x: multi_label_binary_loss(x, y, cfg), z, abs_floor=SUITE_ABS_FLOOR
        )
        assert error < 1e-5
