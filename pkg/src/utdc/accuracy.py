"""Label-free estimates of a classifier's accuracy on a target domain.

Two estimators are provided:

* ATC picks a confidence threshold on the labelled source so that the fraction
  of source samples above it equals the source accuracy, then reports the
  fraction of target samples above the same threshold.
* Meta regresses accuracy on the squared Frechet distance between diagonal
  Gaussian summaries of a reference dataset and a set of shifted datasets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from . import metrics
from .errors import (
    DegenerateRegressionError,
    EmptyInputError,
    InsufficientSamplesError,
    InvalidArgumentError,
    ShapeError,
)
from .metrics import PredictionSet


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        var = np.asarray(self.variance, dtype=np.float64).reshape(-1)
        if mean.shape != var.shape:
            raise ShapeError(f"mean has d={mean.size} but variance has d={var.size}")
        if np.any(var < 0) or not np.all(np.isfinite(var)) or not np.all(np.isfinite(mean)):
            raise InvalidArgumentError("variances must be finite and non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def d(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class MetaDatasetRecord:
    """One shifted dataset with its measured accuracy.

    Either a feature ``summary`` or a precomputed ``frechet_sq`` distance to the
    reference dataset must be given.
    """

    accuracy: float
    summary: Optional[GaussianSummary] = None
    frechet_sq: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise InvalidArgumentError(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if self.summary is None and self.frechet_sq is None:
            raise InvalidArgumentError("a meta-dataset record needs a summary or a frechet_sq")


@dataclass(frozen=True)
class AccuracyEstimate:
    value: float
    method: Literal["ATC", "Meta", "Oracle"]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "value", float(np.clip(self.value, 0.0, 1.0)))

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method,
                "diagnostics": dict(sorted(self.diagnostics.items()))}


@dataclass(frozen=True)
class MetaRegression:
    w: float
    b: float

    def predict(self, frechet_sq: float) -> float:
        return self.w * frechet_sq + self.b


def atc_threshold(source: PredictionSet) -> tuple[float, float]:
    """Return ``(threshold, source_accuracy)`` for ATC.

    The threshold is the sorted source confidence at index
    ``n_wrong - 1`` (clamped to 0), i.e. the empirical (1 - A)-quantile.
    """
    source.require_labels("ATC")
    prof = metrics.profile(source)
    n = source.n
    n_wrong = n - int(prof.correct.sum())
    idx = min(max(n_wrong - 1, 0), n - 1)
    t = float(np.sort(prof.confidence)[idx])
    return t, (n - n_wrong) / n


def atc_estimate(source: PredictionSet, target: PredictionSet) -> AccuracyEstimate:
    source.require_labels("ATC")
    if target is None or target.n == 0:
        raise EmptyInputError("ATC needs a non-empty target set")
    if target.k != source.k:
        raise ShapeError(f"source has k={source.k} classes, target has k={target.k}")
    t, a_source = atc_threshold(source)
    above = metrics.max_confidence(target.logits) > t
    return AccuracyEstimate(float(np.mean(above)), "ATC",
                            {"threshold": t, "source_accuracy": a_source})


def oracle_estimate(target: PredictionSet) -> AccuracyEstimate:
    """True target accuracy from revealed labels (for UTDC* style runs)."""
    return AccuracyEstimate(target.accuracy(), "Oracle")


def frechet_distance_sq(a: GaussianSummary, b: GaussianSummary) -> float:
    if a.d != b.d:
        raise ShapeError(f"summaries have different dimensions {a.d} and {b.d}")
    mean_term = np.sum((a.mean - b.mean) ** 2)
    cov_term = np.sum(a.variance + b.variance - 2.0 * np.sqrt(a.variance * b.variance))
    return float(max(mean_term + cov_term, 0.0))


def summarize_features(features) -> GaussianSummary:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"features must be an (n, d) matrix, got shape {x.shape}")
    if x.shape[0] < 2:
        raise InsufficientSamplesError(f"need at least 2 feature rows, got {x.shape[0]}")
    return GaussianSummary(x.mean(axis=0), np.maximum(x.var(axis=0), 0.0))


def meta_fit(records: Sequence[MetaDatasetRecord],
             source_summary: Optional[GaussianSummary] = None) -> MetaRegression:
    """Least-squares line ``accuracy = w * F + b`` over the meta-datasets."""
    if len(records) < 2:
        raise DegenerateRegressionError(
            f"meta regression needs at least 2 records, got {len(records)}"
        )
    F = np.empty(len(records))
    for i, rec in enumerate(records):
        if rec.summary is not None:
            if source_summary is None:
                raise InvalidArgumentError("records with summaries need a source summary")
            F[i] = frechet_distance_sq(source_summary, rec.summary)
        else:
            F[i] = rec.frechet_sq
    A = np.array([rec.accuracy for rec in records])
    return _ols(F, A)


def _ols(F: np.ndarray, A: np.ndarray) -> MetaRegression:
    f_mean, a_mean = F.mean(), A.mean()
    sxx = np.sum((F - f_mean) ** 2)
    if sxx == 0.0 or np.ptp(F) == 0.0:
        raise DegenerateRegressionError("all Frechet distances are identical")
    w = np.sum((F - f_mean) * (A - a_mean)) / sxx
    return MetaRegression(float(w), float(a_mean - w * f_mean))


def meta_estimate(model: MetaRegression, source_summary: GaussianSummary,
                  target_features) -> AccuracyEstimate:
    F = frechet_distance_sq(source_summary, summarize_features(target_features))
    return AccuracyEstimate(model.predict(F), "Meta",
                            {"w": model.w, "b": model.b, "frechet_sq": F})
