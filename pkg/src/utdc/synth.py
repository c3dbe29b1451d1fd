"""Synthetic source/target logits with a known temperature and accuracy gap.

Generation, for latent logits ``z``:

1. Class means ``mu`` (a scaled identity plus noise); each sample picks a class
   uniformly and draws ``z ~ N(mu[c], I)``. Labels are sampled from
   ``softmax(z)``, so ``z`` is perfectly calibrated.
2. Observed source logits are ``scale * z``: the model is overconfident and the
   optimal temperature is ``scale``.
3. The target uses perturbed class means. A random ``1 - drop`` fraction of
   target samples is relabelled to a class other than the predicted one, which
   thins correctness uniformly across confidence levels (accuracy ratio
   ``drop`` in expectation).
4. Target logits are additionally shrunk by a factor ``c <= 1`` so that target
   confidences degrade with accuracy: ``c`` is chosen so the expected fraction
   of target samples above the source ATC threshold equals the expected target
   accuracy. The shrink preserves confidence ranks, so equal-mass bins line up
   with the unshrunk ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import metrics
from .errors import InvalidArgumentError
from .metrics import PredictionSet

CLASS_SIGNAL = 4.0
MEAN_NOISE = 0.5
TARGET_MEAN_SHIFT = 0.3


@dataclass(frozen=True, eq=False)
class SyntheticDomains:
    source: PredictionSet
    target: PredictionSet          # labels hidden
    target_labels: np.ndarray      # revealed only for evaluation
    source_features: np.ndarray
    target_features: np.ndarray
    confidence_shift: float
    expected_source_accuracy: float
    expected_target_accuracy: float

    @property
    def nominal_ratio(self) -> float:
        return self.expected_target_accuracy / self.expected_source_accuracy

    @property
    def labelled_target(self) -> PredictionSet:
        return self.target.with_labels(self.target_labels)

    @property
    def true_ratio(self) -> float:
        return self.labelled_target.accuracy() / self.source.accuracy()


def _draw(rng, n, means):
    k = means.shape[0]
    cls = rng.integers(0, k, n)
    z = means[cls] + rng.standard_normal((n, k))
    p = metrics.softmax(z)
    u = rng.random((n, 1))
    labels = np.minimum((np.cumsum(p, axis=1) < u).sum(axis=1), k - 1)
    return z, labels, p


def synth_generate(seed: int, n_s: int, n_t: int, k: int,
                   overconfidence_scale: float, target_accuracy_drop: float) -> SyntheticDomains:
    if n_s < 1 or n_t < 1 or k < 2:
        raise InvalidArgumentError(f"need n_s, n_t >= 1 and k >= 2, got {n_s}, {n_t}, {k}")
    if not overconfidence_scale > 0:
        raise InvalidArgumentError(f"overconfidence_scale must be > 0, got {overconfidence_scale}")
    if not 0 < target_accuracy_drop <= 1:
        raise InvalidArgumentError(
            f"target_accuracy_drop must lie in (0, 1], got {target_accuracy_drop}"
        )
    rng = np.random.default_rng(seed)
    means = CLASS_SIGNAL * np.eye(k) + MEAN_NOISE * rng.standard_normal((k, k))
    z_s, y_s, p_s = _draw(rng, n_s, means)
    target_means = means + TARGET_MEAN_SHIFT * rng.standard_normal((k, k))
    z_t, y_t, p_t = _draw(rng, n_t, target_means)

    pred_t = np.argmax(z_t, axis=1)
    flip = rng.random(n_t) < 1.0 - target_accuracy_drop
    wrong = (pred_t + rng.integers(1, k, n_t)) % k
    y_t = np.where(flip, wrong, y_t)

    exp_acc_s = float(np.mean(p_s.max(axis=1)))
    exp_acc_t = float(target_accuracy_drop * np.mean(p_t.max(axis=1)))
    src_conf = np.sort(metrics.max_confidence(overconfidence_scale * z_s))
    idx = min(max(int(np.ceil((1.0 - exp_acc_s) * n_s)) - 1, 0), n_s - 1)
    threshold = src_conf[idx]

    def excess(c):
        conf = metrics.max_confidence(overconfidence_scale * c * z_t)
        return float(np.mean(conf > threshold)) - exp_acc_t

    c = 1.0
    if excess(1.0) > 0 and excess(1e-6) < 0:
        c = brentq(excess, 1e-6, 1.0, xtol=1e-10)

    return SyntheticDomains(
        source=PredictionSet(overconfidence_scale * z_s, y_s),
        target=PredictionSet(overconfidence_scale * c * z_t),
        target_labels=y_t,
        source_features=z_s,
        target_features=z_t,
        confidence_shift=float(c),
        expected_source_accuracy=exp_acc_s,
        expected_target_accuracy=exp_acc_t,
    )
