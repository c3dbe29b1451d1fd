"""Unsupervised target-domain temperature calibration.

Source equal-mass bin accuracies are rescaled by the target/source accuracy
ratio R and used as stand-in accuracies for the target's own equal-mass bins.
Target bins are formed once at T=1 and kept fixed while the temperature grid
is scanned; only the per-bin mean confidences move with T.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from . import metrics
from .accuracy import AccuracyEstimate
from .errors import InsufficientSamplesError, InvalidArgumentError
from .grid import DEFAULT_GRID, TemperatureGrid, grid_minimize
from .metrics import BinPartition, PredictionSet


def rescale_bin_accuracies(source_bin_acc, R: float) -> np.ndarray:
    R = float(R)
    if not np.isfinite(R) or R <= 0:
        raise InvalidArgumentError(f"correction ratio must be > 0, got {R}")
    acc = np.asarray(source_bin_acc, dtype=np.float64)
    if np.any((acc < 0) | (acc > 1)):
        raise InvalidArgumentError("bin accuracies must lie in [0, 1]")
    return np.minimum(1.0, acc * R)


@dataclass(eq=False)
class UtdcInputs:
    """Source (labelled), target (labels ignored) and the accuracy ratio.

    ``ratio`` is either an explicit R or an :class:`AccuracyEstimate` of the
    target accuracy, in which case R = estimate / source accuracy.
    """

    source: PredictionSet
    target: PredictionSet
    ratio: Union[float, AccuracyEstimate]
    M: int = metrics.DEFAULT_BINS

    def __post_init__(self):
        self.source.require_labels("UTDC source set")
        if self.source.k != self.target.k:
            raise InvalidArgumentError(
                f"source has k={self.source.k} classes, target has k={self.target.k}"
            )
        for name, ps in (("source", self.source), ("target", self.target)):
            if ps.n < self.M:
                raise InsufficientSamplesError(
                    f"{name} set has n={ps.n} < M={self.M} bins"
                )
        self.target = self.target.without_labels()
        if not isinstance(self.ratio, AccuracyEstimate):
            rescale_bin_accuracies([], self.ratio)

    @cached_property
    def source_accuracy(self) -> float:
        return self.source.accuracy()

    @cached_property
    def ratio_value(self) -> float:
        if isinstance(self.ratio, AccuracyEstimate):
            if self.source_accuracy == 0:
                raise InvalidArgumentError("source accuracy is 0; the ratio is undefined")
            return self.ratio.value / self.source_accuracy
        return float(self.ratio)

    @cached_property
    def source_bins(self) -> BinPartition:
        return metrics.partition_equal_mass(metrics.profile(self.source), self.M)

    @cached_property
    def frozen_target_bins(self) -> BinPartition:
        return metrics.partition_equal_mass(metrics.profile(self.target), self.M)

    def estimated_bin_accuracies(self, R: Optional[float] = None) -> np.ndarray:
        return rescale_bin_accuracies(self.source_bins.bin_accuracy,
                                      self.ratio_value if R is None else R)

    def target_bin_confidence(self, T: float) -> np.ndarray:
        conf = metrics.max_confidence(self.target.logits, T)
        return self.frozen_target_bins.mean_per_bin(conf)


@dataclass(frozen=True, eq=False)
class UtdcResult:
    temperature: float
    uda_ada_ece_at_fit: float
    estimated_bin_accuracies: np.ndarray
    frozen_target_bins: BinPartition
    ratio_used: float
    bin_confidences_at_fit: np.ndarray
    grid_points: int = 0

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "objective": self.uda_ada_ece_at_fit,
            "ratio_used": self.ratio_used,
            "bin_accuracies": self.estimated_bin_accuracies.tolist(),
            "bin_confidences_at_fit": self.bin_confidences_at_fit.tolist(),
        }


def _objective(est_acc: np.ndarray, inputs: UtdcInputs, T: float) -> float:
    return float(np.mean(np.abs(est_acc - inputs.target_bin_confidence(T))))


def uda_ada_ece(inputs: UtdcInputs, T: float, R: Optional[float] = None) -> float:
    return _objective(inputs.estimated_bin_accuracies(R), inputs, T)


def utdc_fit(inputs: UtdcInputs, grid: TemperatureGrid = DEFAULT_GRID,
             R: Optional[float] = None) -> UtdcResult:
    R = inputs.ratio_value if R is None else float(R)
    est = inputs.estimated_bin_accuracies(R)
    res = grid_minimize(lambda T: _objective(est, inputs, T), grid)
    return UtdcResult(
        temperature=res.temperature,
        uda_ada_ece_at_fit=res.value,
        estimated_bin_accuracies=est,
        frozen_target_bins=inputs.frozen_target_bins,
        ratio_used=R,
        bin_confidences_at_fit=inputs.target_bin_confidence(res.temperature),
        grid_points=res.evaluations,
    )


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    temperature: float
    objective: float
    true_ada_ece: Optional[float] = None

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "temperature": self.temperature,
                "objective": self.objective, "true_ada_ece": self.true_ada_ece}


def r_sweep(inputs: UtdcInputs, r_values: Sequence[float],
            eval_labels=None, grid: TemperatureGrid = DEFAULT_GRID) -> list[SweepPoint]:
    """Fit the temperature for every R; bins are shared across the sweep.

    With ``eval_labels`` the true target adaECE at each fitted temperature is
    reported alongside the label-free objective.
    """
    r_values = list(r_values)
    if not r_values:
        raise InvalidArgumentError("r_values must not be empty")
    for r in r_values:
        rescale_bin_accuracies([], r)
    evaluated = None
    if eval_labels is not None:
        evaluated = inputs.target.with_labels(eval_labels)
    points = []
    for r in r_values:
        fit = utdc_fit(inputs, grid, R=r)
        true = None
        if evaluated is not None:
            true = metrics.ada_ece(evaluated, inputs.M, fit.temperature)
        points.append(SweepPoint(float(r), fit.temperature, fit.uda_ada_ece_at_fit, true))
    return points


def bin_ratio_diagnostic(source: PredictionSet, target: PredictionSet,
                         M: int = metrics.DEFAULT_BINS) -> list[tuple[float, float]]:
    """Per-bin (source accuracy, target accuracy) on each domain's own bins."""
    source.require_labels("bin ratio diagnostic (source)")
    target.require_labels("bin ratio diagnostic (target)")
    s = metrics.partition_equal_mass(metrics.profile(source), M)
    t = metrics.partition_equal_mass(metrics.profile(target), M)
    return [(float(a), float(b)) for a, b in zip(s.bin_accuracy, t.bin_accuracy)]
