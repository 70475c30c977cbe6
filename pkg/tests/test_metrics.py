import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from race.metrics import (
    ConfusionAccumulator,
    MetricsReport,
    aggregate,
    evaluate,
    example_accuracy,
    example_f1,
    hamming_loss,
    macro_f1,
    mean_report,
    mean_std,
    micro_f1,
    rank,
    rank_table,
    subset_accuracy,
)


def brute(L, Y):
    """Entry-by-entry recomputation with plain loops."""
    n, l = len(L), len(L[0])
    ham = acc = f1 = sub = 0.0
    tp = [0] * l
    fp = [0] * l
    fn = [0] * l
    for i in range(n):
        inter = union = sl = sy = diff = 0
        for j in range(l):
            a, b = int(L[i][j]), int(Y[i][j])
            inter += a and b
            union += a or b
            sl += a
            sy += b
            diff += a != b
            tp[j] += a and b
            fp[j] += (not a) and b
            fn[j] += a and not b
        ham += diff / l
        acc += 1.0 if union == 0 else inter / union
        f1 += 1.0 if sl + sy == 0 else 2 * inter / (sl + sy)
        sub += diff == 0
    TP, FP, FN = sum(tp), sum(fp), sum(fn)
    micro = 0.0 if 2 * TP + FP + FN == 0 else 2 * TP / (2 * TP + FP + FN)
    per = [0.0 if 2 * tp[j] + fp[j] + fn[j] == 0 else 2 * tp[j] / (2 * tp[j] + fp[j] + fn[j]) for j in range(l)]
    return {
        "hamming_loss": ham / n,
        "example_accuracy": acc / n,
        "example_f1": f1 / n,
        "subset_accuracy": sub / n,
        "micro_f1": micro,
        "macro_f1": sum(per) / l,
    }


def acc_of(L, Y):
    return ConfusionAccumulator(np.asarray(L).shape[1]).update(L, Y)


def test_hamming_examples():
    L = np.array([[1, 0, 1]])
    assert hamming_loss(L, L) == 0
    assert hamming_loss(L, [[1, 1, 1]]) == pytest.approx(1 / 3)
    assert hamming_loss(L, 1 - L) == 1


def test_example_accuracy_examples():
    assert example_accuracy([[1, 1, 0]], [[1, 1, 0]]) == 1
    assert example_accuracy([[1, 1, 0]], [[1, 0, 0]]) == 0.5
    assert example_accuracy([[0, 0]], [[0, 0]]) == 1


def test_example_f1_examples():
    assert example_f1([[1, 0, 1]], [[1, 0, 1]]) == 1
    assert example_f1([[1, 1, 0]], [[1, 0, 0]]) == pytest.approx(2 / 3)
    assert example_f1([[1, 0]], [[0, 1]]) == 0


def test_micro_f1_examples():
    L = np.array([[1, 0, 1], [0, 1, 0]])
    assert micro_f1(acc_of(L, L)) == 1
    assert micro_f1(acc_of(L, np.zeros_like(L))) == 0
    # TP=2, FP=1, FN=1
    Y = np.array([[1, 1, 1], [0, 0, 0]])
    assert micro_f1(acc_of(L, Y)) == pytest.approx(2 / 3)


def test_macro_f1_examples():
    L = np.array([[1, 1], [0, 1]])
    assert macro_f1(acc_of(L, L)) == 1
    Y = np.array([[1, 0], [0, 0]])
    assert macro_f1(acc_of(L, Y)) == 0.5
    # a label absent from both truth and prediction contributes 0
    assert macro_f1(acc_of([[1, 0]], [[1, 0]])) == 0.5


def test_subset_accuracy_examples():
    L = np.array([[1, 0], [0, 1], [1, 1], [0, 0]])
    assert subset_accuracy(L, L) == 1
    Y = L.copy()
    Y[2, 0] = 0
    assert subset_accuracy(L, Y) == 0.75
    assert subset_accuracy(np.zeros((3, 2)), np.zeros((3, 2))) == 1


def test_shape_mismatch():
    with pytest.raises(ValueError):
        hamming_loss(np.zeros((2, 3)), np.zeros((2, 2)))


@pytest.mark.parametrize("seed", range(20))
def test_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    L = rng.integers(0, 2, (10, 7))
    Y = rng.integers(0, 2, (10, 7))
    report = evaluate(L, Y)
    for name, value in brute(L.tolist(), Y.tolist()).items():
        assert abs(getattr(report, name) - value) <= 1e-12, name


binary = arrays(np.int8, st.tuples(st.integers(1, 12), st.integers(1, 9)), elements=st.integers(0, 1))


@settings(max_examples=150, deadline=None)
@given(binary, st.data())
def test_range_and_perfect_worst_properties(L, data):
    Y = data.draw(arrays(np.int8, L.shape, elements=st.integers(0, 1)))
    r = evaluate(L, Y)
    for name in ("example_accuracy", "example_f1", "hamming_loss", "micro_f1", "macro_f1", "subset_accuracy"):
        assert 0.0 <= getattr(r, name) <= 1.0
    perfect = evaluate(L, L)
    assert perfect.hamming_loss == 0
    assert perfect.example_accuracy == perfect.example_f1 == perfect.subset_accuracy == 1
    if L.any():
        assert perfect.micro_f1 == 1
    assert evaluate(L, 1 - L).hamming_loss == 1


@settings(max_examples=60, deadline=None)
@given(binary, st.integers(0, 2**31 - 1))
def test_accumulation_over_concatenation(L, seed):
    rng = np.random.default_rng(seed)
    Y = rng.integers(0, 2, L.shape)
    cut = int(rng.integers(0, L.shape[0] + 1))
    whole = acc_of(L, Y)
    parts = ConfusionAccumulator(L.shape[1]).update(L[:cut], Y[:cut])
    parts.update(L[cut:], Y[cut:])
    assert parts == whole
    merged = acc_of(L[:cut], Y[:cut]).merge(acc_of(L[cut:], Y[cut:]))
    assert merged == whole
    assert np.all(whole.tp + whole.fp + whole.tn + whole.fn == L.shape[0])


def test_merge_label_count_mismatch():
    with pytest.raises(ValueError):
        ConfusionAccumulator(2).merge(ConfusionAccumulator(3))


def test_mean_std_examples():
    assert mean_std([0.5]) == (0.5, 0.0)
    mean, std = mean_std([0.2, 0.4])
    assert mean == pytest.approx(0.3)
    assert std == pytest.approx(0.1414, abs=1e-4)


def test_aggregate_over_reports():
    reps = [MetricsReport(0.2, 0.1, 0.1, 0.5, 0.4, 0.0, 1.0), MetricsReport(0.4, 0.3, 0.3, 0.5, 0.2, 0.0, 3.0)]
    means, stds = aggregate(reps)
    assert means["example_accuracy"] == pytest.approx(0.3)
    assert stds["example_accuracy"] == pytest.approx(math.sqrt(0.02))
    assert stds["micro_f1"] == 0
    assert means["runtime_seconds"] == 2.0


def test_ranks():
    assert rank([0.1, 0.3], lower_is_better=True) == [1, 2]
    assert rank([0.1, 0.3]) == [2, 1]
    assert rank([0.5, 0.7, 0.5, 0.2]) == [2, 1, 2, 4]
    table = rank_table({"a": {"hamming_loss": 0.1, "micro_f1": 0.2}, "b": {"hamming_loss": 0.3, "micro_f1": 0.6}})
    assert table == {"a": {"hamming_loss": 1, "micro_f1": 2}, "b": {"hamming_loss": 2, "micro_f1": 1}}


def test_mean_report_equal_batch_weight():
    r1 = evaluate([[1, 0]], [[1, 0]])
    r2 = evaluate([[1, 0]] * 9, [[0, 1]] * 9)
    avg = mean_report([r1, r2], runtime_seconds=2.5)
    assert avg.hamming_loss == 0.5
    assert avg.runtime_seconds == 2.5
    assert math.isnan(mean_report([]).micro_f1)


def test_report_dict_round_trip():
    r = evaluate([[1, 0, 1]], [[1, 1, 0]], 0.25)
    assert MetricsReport.from_dict(r.to_dict()) == r
