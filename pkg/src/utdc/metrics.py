"""Confidence, binning and calibration metrics over classifier logits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import (
    InsufficientSamplesError,
    InvalidArgumentError,
    LabelsRequiredError,
    ShapeError,
)

DEFAULT_BINS = 15
PROB_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Logits of shape (n, k) plus optional integer labels of shape (n,)."""

    logits: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        if logits.ndim != 2:
            raise ShapeError(f"logits must be a 2-d array, got shape {logits.shape}")
        n, k = logits.shape
        if n < 1:
            raise InvalidArgumentError("a prediction set needs at least one sample")
        if k < 2:
            raise InvalidArgumentError(f"need at least 2 classes, got k={k}")
        if not np.all(np.isfinite(logits)):
            row, col = np.argwhere(~np.isfinite(logits))[0]
            raise InvalidArgumentError(f"non-finite logit at row {row}, column {col}")
        object.__setattr__(self, "logits", logits)

        if self.labels is not None:
            raw = np.asarray(self.labels)
            if raw.shape != (n,):
                raise ShapeError(f"expected {n} labels, got shape {raw.shape}")
            if raw.dtype.kind == "f":
                if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                    raise InvalidArgumentError("labels must be integers")
            elif raw.dtype.kind not in "iu":
                raise InvalidArgumentError(f"labels must be integers, got dtype {raw.dtype}")
            labels = raw.astype(np.int64)
            bad = np.flatnonzero((labels < 0) | (labels >= k))
            if bad.size:
                raise InvalidArgumentError(
                    f"label {labels[bad[0]]} at row {bad[0]} outside [0, {k})"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.logits.shape[0]

    @property
    def k(self) -> int:
        return self.logits.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def require_labels(self, what: str = "this operation") -> np.ndarray:
        if self.labels is None:
            raise LabelsRequiredError(f"{what} requires labels")
        return self.labels

    def without_labels(self) -> "PredictionSet":
        return PredictionSet(self.logits)

    def with_labels(self, labels) -> "PredictionSet":
        return PredictionSet(self.logits, labels)

    def accuracy(self) -> float:
        labels = self.require_labels("accuracy")
        return float(np.mean(np.argmax(self.logits, axis=1) == labels))


@dataclass(frozen=True, eq=False)
class ConfidenceProfile:
    predicted_class: np.ndarray
    confidence: np.ndarray
    # per-sample 0/1 correctness, only when labels were available
    correct: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.confidence.shape[0]


@dataclass(frozen=True, eq=False)
class BinPartition:
    mode: Literal["equal-width", "equal-mass"]
    M: int
    assignment: np.ndarray
    bin_count: np.ndarray
    bin_confidence: np.ndarray
    bin_accuracy: Optional[np.ndarray] = None

    def mean_per_bin(self, values: np.ndarray) -> np.ndarray:
        """Average ``values`` inside every bin; empty bins give 0."""
        sums = np.bincount(self.assignment, weights=values, minlength=self.M)
        out = np.zeros(self.M)
        nz = self.bin_count > 0
        out[nz] = sums[nz] / self.bin_count[nz]
        return out


def _check_temperature(T: float) -> float:
    T = float(T)
    if not np.isfinite(T) or T <= 0:
        raise InvalidArgumentError(f"temperature must be a positive finite number, got {T}")
    return T


def softmax(logits, T: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax along the last axis (max-subtracted)."""
    T = _check_temperature(T)
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidArgumentError("logits must be finite")
    z = (z - z.max(axis=-1, keepdims=True)) / T
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits, T: float = 1.0) -> np.ndarray:
    T = _check_temperature(T)
    z = np.asarray(logits, dtype=np.float64)
    z = (z - z.max(axis=-1, keepdims=True)) / T
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def max_confidence(logits: np.ndarray, T: float = 1.0) -> np.ndarray:
    """Max softmax probability per row, ``1 / sum_j exp((z_j - z_max) / T)``."""
    T = _check_temperature(T)
    z = (logits - logits.max(axis=1, keepdims=True)) / T
    return 1.0 / np.exp(z).sum(axis=1)


def profile(preds: PredictionSet, T: float = 1.0) -> ConfidenceProfile:
    predicted = np.argmax(preds.logits, axis=1)
    confidence = max_confidence(preds.logits, T)
    correct = None
    if preds.labels is not None:
        correct = (predicted == preds.labels).astype(np.float64)
    return ConfidenceProfile(predicted, confidence, correct)


def _check_bins(M: int) -> int:
    if int(M) != M or M < 1:
        raise InvalidArgumentError(f"bin count must be a positive integer, got {M}")
    return int(M)


def equal_mass_assignment(confidence: np.ndarray, M: int) -> np.ndarray:
    """Bin index per sample: sort by (confidence, index); the first n mod M bins get one extra."""
    n = confidence.shape[0]
    if n < M:
        raise InsufficientSamplesError(
            f"equal-mass binning needs n >= M, got n={n}, M={M}"
        )
    order = np.argsort(confidence, kind="stable")
    sizes = np.full(M, n // M)
    sizes[: n % M] += 1
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.repeat(np.arange(M), sizes)
    return assignment


def _summarize(mode, M, assignment, prof: ConfidenceProfile) -> BinPartition:
    counts = np.bincount(assignment, minlength=M)
    part = BinPartition(mode, M, assignment, counts, np.zeros(M))
    conf = part.mean_per_bin(prof.confidence)
    acc = None if prof.correct is None else part.mean_per_bin(prof.correct)
    return BinPartition(mode, M, assignment, counts, conf, acc)


def partition_equal_mass(prof: ConfidenceProfile, M: int) -> BinPartition:
    M = _check_bins(M)
    return _summarize("equal-mass", M, equal_mass_assignment(prof.confidence, M), prof)


def partition_equal_width(prof: ConfidenceProfile, M: int) -> BinPartition:
    M = _check_bins(M)
    assignment = np.minimum(np.floor(prof.confidence * M).astype(np.int64), M - 1)
    return _summarize("equal-width", M, assignment, prof)


def ece(preds: PredictionSet, M: int = DEFAULT_BINS, T: float = 1.0) -> float:
    preds.require_labels("ece")
    part = partition_equal_width(profile(preds, T), M)
    gaps = np.abs(part.bin_accuracy - part.bin_confidence)
    return float(np.sum(part.bin_count / preds.n * gaps))


def ada_ece(preds: PredictionSet, M: int = DEFAULT_BINS, T: float = 1.0) -> float:
    preds.require_labels("ada_ece")
    part = partition_equal_mass(profile(preds, T), M)
    return float(np.mean(np.abs(part.bin_accuracy - part.bin_confidence)))


def frozen_ada_ece(preds: PredictionSet, part: BinPartition, T: float) -> float:
    """adaECE at temperature T with bin membership taken from ``part``."""
    if part.bin_accuracy is None:
        raise LabelsRequiredError("frozen adaECE requires a labelled partition")
    conf_t = part.mean_per_bin(max_confidence(preds.logits, T))
    return float(np.mean(np.abs(part.bin_accuracy - conf_t)))


def nll(preds: PredictionSet, T: float = 1.0) -> float:
    labels = preds.require_labels("nll")
    p = softmax(preds.logits, T)[np.arange(preds.n), labels]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def brier(preds: PredictionSet, T: float = 1.0) -> float:
    labels = preds.require_labels("brier")
    p = softmax(preds.logits, T)
    p[np.arange(preds.n), labels] -= 1.0
    return float(np.mean(np.sum(p * p, axis=1)))


def calibration_metrics(preds: PredictionSet, M: int = DEFAULT_BINS) -> dict[str, float]:
    """The four reported metrics, keyed in report order."""
    return {
        "ada_ece": ada_ece(preds, M),
        "ece": ece(preds, M),
        "nll": nll(preds),
        "brier": brier(preds),
    }
