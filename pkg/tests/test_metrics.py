import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utdc import metrics
from utdc.errors import InsufficientSamplesError, InvalidArgumentError, LabelsRequiredError
from utdc.metrics import PredictionSet

from oracles import ada_ece_bruteforce, ece_bruteforce, nll_bruteforce


def logits_for_confidences(conf):
    """Binary logits whose class-0 softmax equals each confidence (> 0.5)."""
    conf = np.asarray(conf, dtype=float)
    return np.column_stack([np.log(conf / (1 - conf)), np.zeros_like(conf)])


def set_from(conf, correct):
    logits = logits_for_confidences(conf)
    labels = np.where(np.asarray(correct) == 1, 0, 1)
    return PredictionSet(logits, labels)


# ---- softmax / profile -------------------------------------------------------

def test_softmax_examples():
    np.testing.assert_allclose(metrics.softmax([5.0, 5.0]), [0.5, 0.5])
    e2 = math.exp(2) / (math.exp(2) + 1)
    np.testing.assert_allclose(metrics.softmax([2.0, 0.0]), [e2, 1 - e2], atol=1e-12)
    np.testing.assert_allclose(metrics.softmax([2.0, 0.0]), [0.8808, 0.1192], atol=1e-4)
    np.testing.assert_allclose(metrics.softmax([2.0, 0.0], T=1e6), [0.5, 0.5], atol=1e-5)


@pytest.mark.parametrize("T", [0.0, -1.0, float("nan"), float("inf")])
def test_softmax_rejects_bad_temperature(T):
    with pytest.raises(InvalidArgumentError):
        metrics.softmax([1.0, 0.0], T)


def test_softmax_rejects_non_finite_logits():
    with pytest.raises(InvalidArgumentError):
        metrics.softmax([1.0, float("nan")])


def test_softmax_large_logits_are_stable():
    p = metrics.softmax([1000.0, 0.0, -1000.0])
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(
    row=st.lists(st.floats(-50, 50), min_size=2, max_size=12),
    log_t=st.floats(np.log(1e-3), np.log(1e6)),
)
def test_softmax_rows_sum_to_one(row, log_t):
    p = metrics.softmax(row, float(np.exp(log_t)))
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.all(p >= 0)


@settings(max_examples=100, deadline=None)
@given(row=st.lists(st.floats(-20, 20), min_size=2, max_size=12),
       T=st.floats(0.1, 1e6))
def test_softmax_strictly_positive_for_moderate_range(row, T):
    # positivity holds while (z_max - z_j) / T stays above the exp underflow point (~-745)
    assert np.all(metrics.softmax(row, T) > 0)


def test_profile_examples():
    ps = PredictionSet([[2.0, 0.0], [0.0, 3.0]])
    prof = metrics.profile(ps)
    assert prof.predicted_class.tolist() == [0, 1]
    np.testing.assert_allclose(prof.confidence, [0.8808, 0.9526], atol=1e-4)
    assert metrics.profile(ps, T=2.0).predicted_class.tolist() == [0, 1]

    tie = metrics.profile(PredictionSet([[0.0, 0.0, 0.0]]))
    assert tie.predicted_class.tolist() == [0]
    assert tie.confidence[0] == pytest.approx(1 / 3)


def test_profile_carries_correctness_only_with_labels():
    assert metrics.profile(PredictionSet([[1.0, 0.0]])).correct is None
    assert metrics.profile(PredictionSet([[1.0, 0.0]], [1])).correct.tolist() == [0.0]


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_argmax_invariant_under_temperature(data):
    n = data.draw(st.integers(1, 20))
    k = data.draw(st.integers(2, 6))
    vals = data.draw(st.lists(st.floats(-30, 30), min_size=n * k, max_size=n * k))
    T = data.draw(st.floats(1e-2, 1e4))
    ps = PredictionSet(np.array(vals).reshape(n, k))
    assert np.array_equal(metrics.profile(ps, T).predicted_class,
                          metrics.profile(ps).predicted_class)


# ---- PredictionSet validation -----------------------------------------------

@pytest.mark.parametrize("logits, labels", [
    ([[1.0]], None),                          # k < 2
    ([[1.0, float("inf")]], None),            # non-finite
    ([[1.0, 0.0]], [2]),                      # label out of range
    ([[1.0, 0.0]], [-1]),
    ([[1.0, 0.0]], [0.5]),                    # non-integer label
])
def test_prediction_set_rejects_invalid(logits, labels):
    with pytest.raises(InvalidArgumentError):
        PredictionSet(logits, labels)


# ---- binning ----------------------------------------------------------------

def test_equal_mass_example():
    ps = set_from([0.6, 0.7, 0.8, 0.9], [0, 1, 1, 1])
    part = metrics.partition_equal_mass(metrics.profile(ps), 2)
    assert part.bin_count.tolist() == [2, 2]
    np.testing.assert_allclose(part.bin_confidence, [0.65, 0.85], atol=1e-12)
    np.testing.assert_allclose(part.bin_accuracy, [0.5, 1.0])


def test_equal_mass_remainder_goes_to_lowest_bin():
    ps = set_from([0.6, 0.7, 0.8, 0.9, 0.95], [1] * 5)
    assert metrics.partition_equal_mass(metrics.profile(ps), 2).bin_count.tolist() == [3, 2]


def test_equal_mass_needs_enough_samples():
    ps = set_from([0.6, 0.7, 0.8, 0.9], [1] * 4)
    with pytest.raises(InsufficientSamplesError, match="n=4, M=5"):
        metrics.partition_equal_mass(metrics.profile(ps), 5)


def test_equal_mass_without_labels_has_no_accuracy():
    part = metrics.partition_equal_mass(metrics.profile(PredictionSet([[1.0, 0.0]] * 3)), 3)
    assert part.bin_accuracy is None


def test_equal_mass_ties_split_by_index():
    ps = PredictionSet(np.zeros((4, 2)))
    part = metrics.partition_equal_mass(metrics.profile(ps), 2)
    assert part.assignment.tolist() == [0, 0, 1, 1]


def test_equal_width_examples():
    prof = metrics.profile(set_from([0.6, 0.7, 0.8, 0.9], [0, 1, 1, 1]))
    part = metrics.partition_equal_width(prof, 2)
    assert part.assignment.tolist() == [1, 1, 1, 1]
    assert part.bin_count.tolist() == [0, 4]

    one = metrics.ConfidenceProfile(np.zeros(1, int), np.array([1.0]))
    assert metrics.partition_equal_width(one, 10).assignment.tolist() == [9]

    edges = metrics.ConfidenceProfile(np.zeros(2, int), np.array([0.05, 0.95]))
    assert metrics.partition_equal_width(edges, 10).assignment.tolist() == [0, 9]


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 300), data=st.data())
def test_equal_mass_counts_balanced(n, data):
    M = data.draw(st.integers(1, n))
    conf = np.random.default_rng(n * 1000 + M).random(n)
    a = metrics.equal_mass_assignment(conf, M)
    counts = np.bincount(a, minlength=M)
    assert counts.sum() == n
    assert counts.max() - counts.min() <= 1
    # lower confidence never lands in a higher bin
    order = np.argsort(conf)
    assert np.all(np.diff(a[order]) >= 0)


# ---- ece / adaECE ----------------------------------------------------------

def test_ece_examples():
    ps = set_from([0.6, 0.7, 0.8, 0.9], [0, 1, 1, 1])
    assert metrics.ece(ps, 2) == pytest.approx(0.0, abs=1e-12)
    assert metrics.ece(PredictionSet([[100.0, 0.0]], [0]), 10) == pytest.approx(0.0, abs=1e-12)
    assert metrics.ece(PredictionSet([[100.0, 0.0]], [1]), 10) == pytest.approx(1.0, abs=1e-12)


def test_ada_ece_examples():
    ps = set_from([0.6, 0.7, 0.8, 0.9], [0, 1, 1, 1])
    assert metrics.ada_ece(ps, 2) == pytest.approx(0.15, abs=1e-12)
    assert metrics.ada_ece(ps, 1) == pytest.approx(abs(0.75 - 0.75), abs=1e-12)
    # bins with accuracy equal to their mean confidence
    perfect = set_from([0.75] * 4 + [0.6] * 5, [1, 1, 1, 0] + [1, 1, 1, 0, 0])
    assert metrics.ada_ece(perfect, 2) == pytest.approx(0.0, abs=1e-12)


def test_metrics_require_labels():
    ps = PredictionSet([[1.0, 0.0]])
    for fn in (metrics.ece, metrics.ada_ece, metrics.nll, metrics.brier):
        with pytest.raises(LabelsRequiredError):
            fn(ps)


def test_ada_ece_flattens_at_infinite_temperature(rng):
    k = 5
    logits = rng.normal(size=(50, k)) * 3
    ps = PredictionSet(logits, logits.argmax(axis=1))
    assert metrics.ada_ece(ps, 5, T=1e6) == pytest.approx(1 - 1 / k, abs=1e-3)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_ece_and_ada_ece_match_bruteforce(seed):
    r = np.random.default_rng(seed)
    n, k = int(r.integers(1, 120)), int(r.integers(2, 8))
    M = int(r.integers(1, min(n, 20) + 1))
    logits = r.normal(size=(n, k)) * r.uniform(0.1, 5)
    labels = r.integers(0, k, n)
    ps = PredictionSet(logits, labels)
    assert abs(metrics.ece(ps, M) - ece_bruteforce(logits, labels, M)) < 1e-12
    assert abs(metrics.ada_ece(ps, M) - ada_ece_bruteforce(logits, labels, M)) < 1e-12
    assert 0 <= metrics.ece(ps, M) <= 1
    assert 0 <= metrics.ada_ece(ps, M) <= 1


# ---- NLL / Brier ------------------------------------------------------------

def test_nll_examples():
    assert metrics.nll(PredictionSet([[0.0, 0.0]], [0])) == pytest.approx(math.log(2), abs=1e-6)
    assert metrics.nll(PredictionSet([[10.0, 0.0]], [0])) == pytest.approx(
        math.log1p(math.exp(-10)), abs=1e-12)
    assert metrics.nll(PredictionSet([[10.0, 0.0]], [0])) == pytest.approx(4.54e-5, abs=1e-6)
    assert metrics.nll(PredictionSet([[0.0, 10.0]], [0])) == pytest.approx(10.0000454, abs=1e-4)


def test_nll_floor_on_saturated_logits():
    assert metrics.nll(PredictionSet([[0.0, 1e4]], [0])) == pytest.approx(-math.log(1e-12))


def test_nll_matches_bruteforce(rng):
    logits = rng.normal(size=(40, 4)) * 3
    labels = rng.integers(0, 4, 40)
    ps = PredictionSet(logits, labels)
    for T in (0.5, 1.0, 2.7):
        assert metrics.nll(ps, T) == pytest.approx(nll_bruteforce(logits, labels, T), abs=1e-12)


def test_brier_examples():
    assert metrics.brier(PredictionSet([[0.0, 0.0]], [1])) == pytest.approx(0.5)
    assert metrics.brier(PredictionSet([[1e3, 0.0]], [0])) == pytest.approx(0.0)
    assert metrics.brier(PredictionSet([[1e3, 0.0]], [1])) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), T=st.floats(0.05, 20))
def test_metric_ranges(seed, T):
    r = np.random.default_rng(seed)
    n, k = int(r.integers(1, 60)), int(r.integers(2, 6))
    ps = PredictionSet(r.normal(size=(n, k)) * 4, r.integers(0, k, n))
    assert metrics.nll(ps, T) >= 0
    assert 0 <= metrics.brier(ps, T) <= 2
