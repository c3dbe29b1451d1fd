"""Post-hoc calibration maps: temperature, vector and matrix scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import metrics
from .errors import InsufficientSamplesError, InvalidArgumentError, ShapeError
from .grid import DEFAULT_GRID, TemperatureGrid, grid_minimize
from .metrics import PredictionSet

MapKind = Literal["temperature", "vector", "matrix"]


@dataclass(frozen=True, eq=False)
class CalibrationMap:
    kind: MapKind
    temperature: Optional[float] = None
    scale: Optional[np.ndarray] = None
    weight: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "temperature":
            T = self.temperature
            if T is None or not np.isfinite(T) or T <= 0:
                raise InvalidArgumentError(f"temperature must be > 0, got {T}")
            object.__setattr__(self, "temperature", float(T))
        elif self.kind == "vector":
            scale = np.asarray(self.scale, dtype=np.float64)
            bias = np.asarray(self.bias, dtype=np.float64)
            if scale.ndim != 1 or bias.shape != scale.shape:
                raise ShapeError(f"vector map needs scale and bias of equal length, "
                                 f"got {scale.shape} and {bias.shape}")
            object.__setattr__(self, "scale", scale)
            object.__setattr__(self, "bias", bias)
        elif self.kind == "matrix":
            weight = np.asarray(self.weight, dtype=np.float64)
            bias = np.asarray(self.bias, dtype=np.float64)
            if weight.ndim != 2 or weight.shape[0] != weight.shape[1] or bias.shape != weight.shape[:1]:
                raise ShapeError(f"matrix map needs a square weight and matching bias, "
                                 f"got {weight.shape} and {bias.shape}")
            object.__setattr__(self, "weight", weight)
            object.__setattr__(self, "bias", bias)
        else:
            raise InvalidArgumentError(f"unknown map kind {self.kind!r}")

    @classmethod
    def identity(cls, kind: MapKind, k: int) -> "CalibrationMap":
        if kind == "temperature":
            return cls("temperature", temperature=1.0)
        if kind == "vector":
            return cls("vector", scale=np.ones(k), bias=np.zeros(k))
        return cls("matrix", weight=np.eye(k), bias=np.zeros(k))

    @property
    def k(self) -> Optional[int]:
        if self.kind == "temperature":
            return None
        return self.bias.shape[0]

    def transform(self, logits: np.ndarray) -> np.ndarray:
        if self.kind == "temperature":
            return logits / self.temperature
        if logits.shape[1] != self.k:
            raise ShapeError(f"map expects k={self.k} classes, got k={logits.shape[1]}")
        if self.kind == "vector":
            return logits * self.scale + self.bias
        return logits @ self.weight.T + self.bias

    def to_dict(self) -> dict:
        if self.kind == "temperature":
            params = {"temperature": self.temperature}
        elif self.kind == "vector":
            params = {"scale": self.scale.tolist(), "bias": self.bias.tolist()}
        else:
            params = {"weight": self.weight.tolist(), "bias": self.bias.tolist()}
        return {"kind": self.kind, "parameters": params}

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationMap":
        try:
            kind, params = data["kind"], data["parameters"]
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed calibration map: {exc}") from None
        return cls(kind, **params)


@dataclass(frozen=True)
class FitReport:
    objective_name: Literal["adaECE", "NLL"]
    objective_value: float
    iterations_or_grid_points: int
    converged: bool
    # objective after every accepted epoch (iterative fits only)
    history: tuple = field(default=(), repr=False)


def apply_map(cmap: CalibrationMap, preds: PredictionSet) -> PredictionSet:
    return PredictionSet(cmap.transform(preds.logits), preds.labels)


def _fit_temperature(objective, name, grid):
    res = grid_minimize(objective, grid)
    report = FitReport(name, res.value, res.evaluations, True)
    return CalibrationMap("temperature", temperature=res.temperature), report


def fit_temperature_nll(preds: PredictionSet, grid: TemperatureGrid = DEFAULT_GRID):
    preds.require_labels("temperature fitting")
    if preds.n < 2:
        raise InsufficientSamplesError(f"temperature fitting needs n >= 2, got n={preds.n}")
    return _fit_temperature(lambda T: metrics.nll(preds, T), "NLL", grid)


def fit_temperature_ada_ece(preds: PredictionSet, M: int = metrics.DEFAULT_BINS,
                            grid: TemperatureGrid = DEFAULT_GRID, freeze_bins: bool = False):
    """Grid-search T for minimal adaECE on labelled data.

    Bins are recomputed at every candidate T unless ``freeze_bins`` is set, in
    which case the T=1 equal-mass partition is reused throughout.
    """
    preds.require_labels("temperature fitting")
    if freeze_bins:
        part = metrics.partition_equal_mass(metrics.profile(preds), M)
        objective = lambda T: metrics.frozen_ada_ece(preds, part, T)  # noqa: E731
    else:
        metrics.equal_mass_assignment(np.zeros(preds.n), M)  # fail early on n < M
        objective = lambda T: metrics.ada_ece(preds, M, T)  # noqa: E731
    return _fit_temperature(objective, "adaECE", grid)


def _nll_and_grad(logits, onehot, cmap: CalibrationMap):
    """Mean NLL of the mapped logits and its gradient wrt the map parameters."""
    z = cmap.transform(logits)
    logp = metrics.log_softmax(z)
    loss = float(-np.mean(np.sum(onehot * logp, axis=1)))
    g = (np.exp(logp) - onehot) / logits.shape[0]
    if cmap.kind == "vector":
        return loss, (np.sum(g * logits, axis=0), g.sum(axis=0))
    return loss, (g.T @ logits, g.sum(axis=0))


def _step(cmap: CalibrationMap, grads, lr: float) -> CalibrationMap:
    dw, db = grads
    if cmap.kind == "vector":
        return CalibrationMap("vector", scale=cmap.scale - lr * dw, bias=cmap.bias - lr * db)
    return CalibrationMap("matrix", weight=cmap.weight - lr * dw, bias=cmap.bias - lr * db)


def _fit_affine(preds: PredictionSet, kind: MapKind, init: Optional[CalibrationMap],
                lr: float, max_epochs: int, tol: float):
    labels = preds.require_labels(f"{kind} scaling")
    if preds.n < max(2, preds.k):
        raise InsufficientSamplesError(
            f"{kind} scaling needs n >= max(2, k), got n={preds.n}, k={preds.k}"
        )
    if init is None:
        cmap = CalibrationMap.identity(kind, preds.k)
    else:
        if init.kind != kind:
            raise InvalidArgumentError(f"warm start is a {init.kind} map, expected {kind}")
        if init.k != preds.k:
            raise ShapeError(f"warm start has k={init.k}, data has k={preds.k}")
        cmap = init
    onehot = np.eye(preds.k)[labels]
    loss, grads = _nll_and_grad(preds.logits, onehot, cmap)
    history = [loss]
    converged = False
    # Full-batch descent with an adaptive step: a step is only accepted when it
    # lowers the loss, so the per-epoch loss sequence is non-increasing.
    for _ in range(max_epochs):
        while True:
            candidate = _step(cmap, grads, lr)
            new_loss, new_grads = _nll_and_grad(preds.logits, onehot, candidate)
            if new_loss <= loss:
                lr *= 1.2
                break
            lr *= 0.5
            if lr < 1e-12:
                candidate = None
                break
        if candidate is None:
            converged = True
            break
        improvement = loss - new_loss
        cmap, loss, grads = candidate, new_loss, new_grads
        history.append(loss)
        if improvement < tol:
            converged = True
            break
    report = FitReport("NLL", loss, len(history) - 1, converged, tuple(history))
    return cmap, report


def fit_vector_scaling(preds: PredictionSet, init: Optional[CalibrationMap] = None,
                       lr: float = 0.01, max_epochs: int = 2000, tol: float = 1e-7):
    return _fit_affine(preds, "vector", init, lr, max_epochs, tol)


def fit_matrix_scaling(preds: PredictionSet, init: Optional[CalibrationMap] = None,
                       lr: float = 0.01, max_epochs: int = 2000, tol: float = 1e-7):
    return _fit_affine(preds, "matrix", init, lr, max_epochs, tol)
