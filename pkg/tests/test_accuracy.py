import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utdc import accuracy
from utdc.accuracy import GaussianSummary, MetaDatasetRecord, MetaRegression
from utdc.errors import (
    DegenerateRegressionError,
    InsufficientSamplesError,
    LabelsRequiredError,
    ShapeError,
)
from utdc.metrics import PredictionSet


def binary(conf, correct=None):
    conf = np.asarray(conf, dtype=float)
    logits = np.column_stack([np.log(conf / (1 - conf)), np.zeros_like(conf)])
    labels = None if correct is None else np.where(np.asarray(correct) == 1, 0, 1)
    return PredictionSet(logits, labels)


# ---- ATC ------------------------------------------------------------------------

def test_atc_hand_example():
    # source confidences [0.5, 0.6, 0.8, 0.9], A = 0.75 -> t = 0.5;
    # target [0.4, 0.55, 0.7] -> 2 of 3 above t.  Confidences below 0.5 are
    # expressed with 3 classes so they remain valid max-softmax values.
    def logits_for(c):
        # class 0 gets c, the other two split the remainder
        rest = (1 - c) / 2
        return [np.log(c), np.log(rest), np.log(rest)]

    src = PredictionSet([logits_for(c) for c in [0.5, 0.6, 0.8, 0.9]], [1, 0, 0, 0])
    tgt = PredictionSet([logits_for(c) for c in [0.4, 0.55, 0.7]])
    est = accuracy.atc_estimate(src, tgt)
    assert est.diagnostics["threshold"] == pytest.approx(0.5, abs=1e-12)
    assert est.value == pytest.approx(2 / 3)


def test_atc_all_correct_uses_minimum_with_strict_comparison():
    src = binary([0.6, 0.7, 0.8], [1, 1, 1])
    tgt = binary([0.6, 0.65, 0.9])
    est = accuracy.atc_estimate(src, tgt)
    assert est.diagnostics["threshold"] == pytest.approx(0.6)
    # the tied 0.6 target sample is not strictly above t
    assert est.value == pytest.approx(2 / 3)


def test_atc_requires_source_labels():
    with pytest.raises(LabelsRequiredError):
        accuracy.atc_estimate(binary([0.6, 0.7]), binary([0.6]))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_atc_self_consistency(seed):
    r = np.random.default_rng(seed)
    n, k = int(r.integers(5, 400)), int(r.integers(2, 8))
    src = PredictionSet(r.normal(size=(n, k)) * r.uniform(0.5, 4), r.integers(0, k, n))
    est = accuracy.atc_estimate(src, src.without_labels())
    assert abs(est.value - src.accuracy()) <= 1 / n


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 100_000), shrink=st.floats(0.0, 1.0))
def test_atc_monotone_when_target_confidence_drops(seed, shrink):
    r = np.random.default_rng(seed)
    src = PredictionSet(r.normal(size=(100, 3)) * 2, r.integers(0, 3, 100))
    tgt = PredictionSet(r.normal(size=(60, 3)) * 2)
    lowered = PredictionSet(tgt.logits * shrink)
    assert accuracy.atc_estimate(src, lowered).value <= accuracy.atc_estimate(src, tgt).value


# ---- Frechet --------------------------------------------------------------------

def test_frechet_examples():
    a = GaussianSummary([0.0], [1.0])
    assert accuracy.frechet_distance_sq(a, a) == 0.0
    assert accuracy.frechet_distance_sq(a, GaussianSummary([3.0], [1.0])) == pytest.approx(9.0, abs=1e-12)
    assert accuracy.frechet_distance_sq(a, GaussianSummary([0.0], [4.0])) == pytest.approx(1.0, abs=1e-12)


def test_frechet_dimension_mismatch():
    with pytest.raises(ShapeError):
        accuracy.frechet_distance_sq(GaussianSummary([0.0], [1.0]), GaussianSummary([0, 0], [1, 1]))


summaries = st.integers(1, 6).flatmap(lambda d: st.tuples(
    st.lists(st.floats(-10, 10), min_size=d, max_size=d),
    st.lists(st.floats(0, 10), min_size=d, max_size=d),
    st.lists(st.floats(-10, 10), min_size=d, max_size=d),
    st.lists(st.floats(0, 10), min_size=d, max_size=d),
))


@settings(max_examples=200, deadline=None)
@given(summaries)
def test_frechet_symmetric_and_non_negative(vals):
    a = GaussianSummary(vals[0], vals[1])
    b = GaussianSummary(vals[2], vals[3])
    dab = accuracy.frechet_distance_sq(a, b)
    assert dab >= 0
    assert dab == pytest.approx(accuracy.frechet_distance_sq(b, a), abs=1e-12)
    assert accuracy.frechet_distance_sq(a, a) <= 1e-12
    if dab <= 1e-12:
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-5)


def test_frechet_matches_independent_formula(rng):
    # closed form via sqrt of the product of diagonal covariances
    for _ in range(20):
        d = int(rng.integers(1, 8))
        m1, m2 = rng.normal(size=d), rng.normal(size=d)
        v1, v2 = rng.uniform(0, 3, d), rng.uniform(0, 3, d)
        s1, s2 = np.diag(v1), np.diag(v2)
        cross = np.diag(np.sqrt(np.diag(s1 @ s2)))
        expected = np.sum((m1 - m2) ** 2) + np.trace(s1 + s2 - 2 * cross)
        got = accuracy.frechet_distance_sq(GaussianSummary(m1, v1), GaussianSummary(m2, v2))
        assert got == pytest.approx(expected, abs=1e-12)


# ---- summaries ------------------------------------------------------------------

def test_summarize_features_examples():
    s = accuracy.summarize_features([[0.0], [2.0]])
    assert s.mean.tolist() == [1.0]
    assert s.variance.tolist() == [1.0]
    const = accuracy.summarize_features([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    assert const.variance[1] == 0.0
    with pytest.raises(InsufficientSamplesError):
        accuracy.summarize_features([[1.0, 2.0]])


# ---- meta regression ------------------------------------------------------------

def record_at(F, A):
    """A 1-d summary at squared distance F from N(0, 1)."""
    return MetaDatasetRecord(A, summary=GaussianSummary([np.sqrt(F)], [1.0]))


SOURCE = GaussianSummary([0.0], [1.0])


def test_meta_fit_collinear():
    recs = [record_at(F, A) for F, A in [(1, 0.9), (2, 0.8), (3, 0.7)]]
    model = accuracy.meta_fit(recs, SOURCE)
    assert model.w == pytest.approx(-0.1, abs=1e-9)
    assert model.b == pytest.approx(1.0, abs=1e-9)
    for F, A in [(1, 0.9), (2, 0.8), (3, 0.7)]:
        assert model.predict(F) == pytest.approx(A, abs=1e-9)


def test_meta_fit_two_points_interpolates():
    model = accuracy.meta_fit([MetaDatasetRecord(0.9, frechet_sq=0.5),
                               MetaDatasetRecord(0.4, frechet_sq=3.0)])
    assert model.predict(0.5) == pytest.approx(0.9)
    assert model.predict(3.0) == pytest.approx(0.4)


def test_meta_fit_degenerate():
    with pytest.raises(DegenerateRegressionError):
        accuracy.meta_fit([record_at(1, 0.9)], SOURCE)
    with pytest.raises(DegenerateRegressionError):
        accuracy.meta_fit([record_at(2, 0.9), record_at(2, 0.7)], SOURCE)


def test_meta_estimate_examples(rng):
    feats = rng.normal(size=(200, 3))
    src = accuracy.summarize_features(feats)
    est = accuracy.meta_estimate(MetaRegression(-0.1, 0.93), src, feats)
    assert est.diagnostics["frechet_sq"] == 0.0
    assert est.value == pytest.approx(0.93)

    one_d = GaussianSummary([0.0], [1.0])
    target = np.array([[np.sqrt(3) - 1.0], [np.sqrt(3) + 1.0]])  # mean sqrt(3), variance 1
    est = accuracy.meta_estimate(MetaRegression(-0.1, 1.0), one_d, target)
    assert est.value == pytest.approx(0.7, abs=1e-12)

    assert accuracy.meta_estimate(MetaRegression(0.0, 1.2), src, feats).value == 1.0


@settings(max_examples=50, deadline=None)
@given(v=st.floats(-5, 5))
def test_estimates_are_clamped(v):
    assert 0.0 <= accuracy.AccuracyEstimate(v, "Meta").value <= 1.0
