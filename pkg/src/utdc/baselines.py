"""Comparison pipelines: source-fitted calibrators, oracles, UTDC and IW-TS."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Literal, Optional

import numpy as np
from sklearn.linear_model import LogisticRegression

from . import maps, metrics
from .accuracy import AccuracyEstimate
from .engine import UtdcInputs, UtdcResult, utdc_fit
from .errors import InsufficientSamplesError, InvalidArgumentError, ShapeError
from .grid import DEFAULT_GRID, TemperatureGrid, grid_minimize
from .maps import CalibrationMap
from .metrics import PredictionSet

WEIGHT_CLIP = (1e-3, 1e3)


@dataclass(frozen=True)
class MethodResult:
    method_name: str
    map: CalibrationMap
    target_metrics: Optional[dict] = None
    notes: dict = field(default_factory=dict)

    @property
    def temperature(self) -> Optional[float]:
        return self.map.temperature if self.map.kind == "temperature" else None

    def to_dict(self) -> dict:
        return {
            "method": self.method_name,
            "map": self.map.to_dict(),
            "target_metrics": self.target_metrics,
            "notes": dict(sorted(self.notes.items())),
        }


@dataclass(frozen=True, eq=False)
class DomainWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ShapeError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidArgumentError("weights must be finite and positive")
        object.__setattr__(self, "weights", w / w.mean())

    @classmethod
    def uniform(cls, n: int) -> "DomainWeights":
        return cls(np.ones(n))


def _evaluate(target: PredictionSet, cmap: CalibrationMap, eval_labels, M: int):
    if eval_labels is None:
        return None
    calibrated = maps.apply_map(cmap, target.with_labels(eval_labels))
    return metrics.calibration_metrics(calibrated, M)


def run_uncalibrated(source, target, eval_labels=None, M=metrics.DEFAULT_BINS,
                     grid=DEFAULT_GRID) -> MethodResult:
    cmap = CalibrationMap.identity("temperature", target.k)
    return MethodResult("Uncalibrated", cmap, _evaluate(target, cmap, eval_labels, M))


def run_source_baseline(kind: Literal["TS", "VS", "MS"], source: PredictionSet,
                        target: PredictionSet, eval_labels=None,
                        M: int = metrics.DEFAULT_BINS,
                        grid: TemperatureGrid = DEFAULT_GRID) -> MethodResult:
    """Fit on the labelled source and apply to the target.

    TS is fitted by adaECE over the temperature grid; VS and MS by NLL.
    """
    if kind == "TS":
        cmap, report = maps.fit_temperature_ada_ece(source, M, grid)
    elif kind == "VS":
        cmap, report = maps.fit_vector_scaling(source)
    elif kind == "MS":
        cmap, report = maps.fit_matrix_scaling(source)
    else:
        raise InvalidArgumentError(f"unknown source baseline {kind!r}")
    notes = {"objective": report.objective_name, "fit_value": report.objective_value}
    return MethodResult(f"Source-{kind}", cmap, _evaluate(target, cmap, eval_labels, M), notes)


def run_oracle_target_ts(target: PredictionSet, M: int = metrics.DEFAULT_BINS,
                         grid: TemperatureGrid = DEFAULT_GRID) -> MethodResult:
    target.require_labels("Target-TS oracle")
    cmap, report = maps.fit_temperature_ada_ece(target, M, grid)
    return MethodResult("Target-TS", cmap, _evaluate(target, cmap, target.labels, M),
                        {"objective": report.objective_name, "fit_value": report.objective_value})


def run_utdc(source: PredictionSet, target: PredictionSet,
             ratio, eval_labels=None, M: int = metrics.DEFAULT_BINS,
             grid: TemperatureGrid = DEFAULT_GRID,
             name: str = "UTDC") -> tuple[MethodResult, UtdcResult]:
    """UTDC with ``ratio`` an explicit R or an :class:`AccuracyEstimate`."""
    inputs = UtdcInputs(source, target, ratio, M)
    fit = utdc_fit(inputs, grid)
    cmap = CalibrationMap("temperature", temperature=fit.temperature)
    notes = {"ratio_used": fit.ratio_used, "uda_ada_ece": fit.uda_ada_ece_at_fit}
    if isinstance(ratio, AccuracyEstimate):
        notes["estimator"] = ratio.method
    return MethodResult(name, cmap, _evaluate(target, cmap, eval_labels, M), notes), fit


def fit_domain_weights(source_features, target_features, C: float = 1.0) -> DomainWeights:
    """Density-ratio weights for source samples from a logistic domain classifier.

    A linear classifier separates source (0) from target (1); each source
    sample gets ``p / (1 - p)``, clipped to ``WEIGHT_CLIP`` and normalised to
    mean 1.
    """
    xs = np.asarray(source_features, dtype=np.float64)
    xt = np.asarray(target_features, dtype=np.float64)
    if xs.ndim != 2 or xt.ndim != 2:
        raise ShapeError("features must be 2-d matrices")
    if xs.shape[1] != xt.shape[1]:
        raise ShapeError(
            f"source features have d={xs.shape[1]}, target features have d={xt.shape[1]}"
        )
    if xs.shape[0] < 2 or xt.shape[0] < 2:
        raise InsufficientSamplesError("both domains need at least 2 feature rows")
    x = np.vstack([xs, xt])
    y = np.r_[np.zeros(len(xs)), np.ones(len(xt))]
    clf = LogisticRegression(C=C, max_iter=1000)
    clf.fit(x, y)
    logit = clf.decision_function(xs)
    ratio = np.exp(np.clip(logit, np.log(WEIGHT_CLIP[0]), np.log(WEIGHT_CLIP[1])))
    return DomainWeights(ratio)


def weighted_nll(preds: PredictionSet, weights: DomainWeights, T: float) -> float:
    logp = metrics.log_softmax(preds.logits, T)[np.arange(preds.n), preds.labels]
    logp = np.maximum(logp, np.log(metrics.PROB_FLOOR))
    w = weights.weights
    return float(-np.sum(w * logp) / np.sum(w))


def run_iw_ts(source: PredictionSet, weights: DomainWeights, target: PredictionSet,
              eval_labels=None, M: int = metrics.DEFAULT_BINS,
              grid: TemperatureGrid = DEFAULT_GRID) -> MethodResult:
    """Temperature fitted by importance-weighted source NLL."""
    source.require_labels("IW-TS")
    if weights.weights.shape[0] != source.n:
        raise ShapeError(f"expected {source.n} weights, got {weights.weights.shape[0]}")
    res = grid_minimize(lambda T: weighted_nll(source, weights, T), grid)
    cmap = CalibrationMap("temperature", temperature=res.temperature)
    return MethodResult("IW-TS", cmap, _evaluate(target, cmap, eval_labels, M),
                        {"objective": "weighted NLL", "fit_value": res.value})


def percentile_accuracy_diagnostic(source: PredictionSet, weights: DomainWeights,
                                   percentiles: int = 5) -> list[float]:
    """Mean source accuracy within equal-count groups of increasing weight."""
    source.require_labels("percentile diagnostic")
    if weights.weights.shape[0] != source.n:
        raise ShapeError(f"expected {source.n} weights, got {weights.weights.shape[0]}")
    if int(percentiles) != percentiles or percentiles < 1 or percentiles > source.n:
        raise InvalidArgumentError(f"percentiles must be in [1, n], got {percentiles}")
    correct = metrics.profile(source).correct
    groups = metrics.equal_mass_assignment(weights.weights, int(percentiles))
    counts = np.bincount(groups, minlength=percentiles)
    return (np.bincount(groups, weights=correct, minlength=percentiles) / counts).tolist()


METHODS = MappingProxyType({
    "uncalibrated": "Uncalibrated",
    "source-ts": "Source-TS",
    "source-vs": "Source-VS",
    "source-ms": "Source-MS",
    "iw-ts": "IW-TS",
    "utdc": "UTDC",
    "utdc-oracle": "UTDC*",
    "target-ts": "Target-TS",
})
