import numpy as np
import pytest

from softstream.core import OUTLIER
from softstream.evaluation import (
    LabelAlignment,
    align_labels,
    confident_precision,
    precision,
    probe_series,
    summarize_run,
)


def test_align_perfect_match() -> None:
    pred = [0, 0, 1, 1]
    truth = [5, 5, 9, 9]
    assert align_labels(pred, truth).mapping == {0: 5, 1: 9}


def test_align_extra_predicted_class_left_unmapped() -> None:
    pred = [0, 0, 1, 1, 2]
    truth = [0, 0, 1, 1, 1]
    mapping = align_labels(pred, truth).mapping
    assert mapping[0] == 0 and mapping[1] == 1
    assert 2 not in mapping


def test_align_greedy_order_on_cooccurrence_matrix() -> None:
    # counts [[90, 10], [5, 95]]: the (1, B) pair at 95 wins first, then (0, A)
    pred = [0] * 100 + [1] * 100
    truth = [10] * 90 + [20] * 10 + [10] * 5 + [20] * 95
    assert align_labels(pred, truth).mapping == {1: 20, 0: 10}


def test_precision_identity() -> None:
    assert precision([1, 2, 3], [1, 2, 3]) == 1.0


def test_precision_three_of_four() -> None:
    alignment = LabelAlignment({0: 0, 1: 1})
    assert precision([0, 0, 1, 1], [0, 0, 1, 0], alignment) == 0.75


def test_precision_counts_unmapped_class_as_wrong() -> None:
    alignment = LabelAlignment({0: 0})
    # predicted class 7 is unmapped; it must not pass through and match truth 7
    assert precision([0, 7], [0, 7], alignment) == 0.5


def test_precision_outlier_rule() -> None:
    alignment = LabelAlignment({0: 0})
    # truth class 9 was never instantiated: the outlier call counts correct
    assert precision([0, OUTLIER], [0, 9], alignment) == 1.0
    # truth class 0 exists in the model: the outlier call counts wrong
    assert precision([0, OUTLIER], [0, 0], alignment) == 0.5


def test_precision_rejects_length_mismatch() -> None:
    with pytest.raises(ValueError):
        precision([0, 1], [0])
    with pytest.raises(ValueError):
        precision([], [])


def test_confident_precision_all_above_threshold() -> None:
    pred, truth = [0, 0, 1, 1], [0, 0, 1, 0]
    typ = [0.9, 0.8, 0.9, 0.9]
    alignment = LabelAlignment({0: 0, 1: 1})
    conf, cov = confident_precision(pred, truth, typ, alignment)
    assert conf == precision(pred, truth, alignment)
    assert cov == 1.0


def test_confident_precision_no_qualifying_points() -> None:
    conf, cov = confident_precision([0], [0], [0.1], LabelAlignment({0: 0}))
    assert (conf, cov) == (1.0, 0.0)


def test_confident_precision_threshold_below_minimum_equals_plain() -> None:
    rng = np.random.default_rng(0)
    pred = rng.integers(0, 3, size=50)
    truth = rng.integers(0, 3, size=50)
    typ = rng.uniform(0.3, 1.0, size=50)
    alignment = align_labels(pred, truth)
    conf, cov = confident_precision(pred, truth, typ, alignment, threshold=0.0)
    assert conf == pytest.approx(precision(pred, truth, alignment))
    assert cov == 1.0


def test_confident_precision_restricts_to_confident_subset() -> None:
    pred = [0, 0, 0, 0]
    truth = [0, 0, 1, 1]
    typ = [0.9, 0.9, 0.1, 0.1]
    conf, cov = confident_precision(pred, truth, typ, LabelAlignment({0: 0}))
    assert conf == 1.0
    assert cov == 0.5


def test_probe_series_shapes() -> None:
    assert probe_series([]).shape == (0, 0)
    table = probe_series([[0.1, 0.9], [0.2, 0.8], [0.3, 0.7]])
    assert table.shape == (3, 2)
    assert table[1, 1] == 0.8


def test_precision_invariant_under_consistent_relabeling() -> None:
    rng = np.random.default_rng(1)
    pred = rng.integers(0, 4, size=200)
    truth = rng.integers(0, 4, size=200)
    base = precision(pred, truth)
    # apply the same permutation to both sides; greedy realignment recovers it
    perm = {0: 13, 1: 7, 2: 22, 3: 4}
    pred2 = np.array([perm[int(p)] for p in pred])
    truth2 = np.array([perm[int(t)] for t in truth])
    assert precision(pred2, truth2) == pytest.approx(base)


def test_summarize_run_counts_discovered_classes() -> None:
    pred = [0, 1, 3, 3, OUTLIER]
    truth = [0, 1, 2, 2, 2]
    typ = [0.9, 0.9, 0.8, 0.7, 0.01]
    doc = summarize_run(pred, truth, typ, n_initial_classes=2)
    assert doc["n_classes_discovered"] == 1
    assert doc["discovered_class_ids"] == [3]
    assert doc["precision"] == pytest.approx(0.8)
