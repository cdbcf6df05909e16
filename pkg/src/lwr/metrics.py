"""Acceptance rules, metrics and risk-coverage curves.

Masks returned here mark ACCEPTED examples (``True`` = prediction kept).

* :func:`accept_mask` keeps ``r > 0``; ``r == 0`` is a rejection.
* :func:`reject_fraction_mask` rejects the ``k = floor(fraction * n + 0.5)``
  examples with the lowest rejector scores, ties broken by original index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import RandomStream


class MetricError(ValueError):
    """A metric is undefined for the given subset."""


def accept_mask(r_scores) -> np.ndarray:
    return np.asarray(r_scores, dtype=np.float64) > 0.0


def n_rejected(n: int, fraction: float) -> int:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"rejection fraction must lie in [0, 1], got {fraction}")
    return min(n, int(math.floor(fraction * n + 0.5)))


def reject_fraction_mask(r_scores, fraction: float) -> np.ndarray:
    r = np.asarray(r_scores, dtype=np.float64)
    k = n_rejected(r.size, fraction)
    mask = np.ones(r.size, dtype=bool)
    mask[np.argsort(r, kind="stable")[:k]] = False
    return mask


def auc_roc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with midranks for ties; labels are -1/+1."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.shape[0]} scores but {labels.shape[0]} labels")
    positive = labels > 0
    n_pos = int(positive.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise MetricError("AUC is undefined unless both classes are present")
    return float(kernels.auc_midrank(scores, positive))


def regression_errors(preds, targets) -> tuple[float, float]:
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValueError(f"{preds.shape[0]} predictions but {targets.shape[0]} targets")
    if preds.size == 0:
        raise MetricError("regression errors are undefined on an empty set")
    diff = preds - targets
    mse = float(np.mean(diff * diff))
    return mse, math.sqrt(mse)


def classification_error(h_scores, labels) -> float:
    """Fraction of sign mistakes; ``h == 0`` counts as +1."""
    h = np.asarray(h_scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if h.size == 0:
        raise MetricError("classification error is undefined on an empty set")
    predicted = np.where(h >= 0.0, 1.0, -1.0)
    return float(np.mean(predicted != labels))


METRICS = {
    "auc": lambda h, y: auc_roc(h, y),
    "error": classification_error,
    "mse": lambda h, y: regression_errors(h, y)[0],
    "rmse": lambda h, y: regression_errors(h, y)[1],
}


def compute_metric(name: str, h, y) -> float:
    try:
        fn = METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; expected one of {sorted(METRICS)}") from None
    return fn(np.asarray(h), np.asarray(y))


@dataclass(frozen=True)
class ScoredBatch:
    h_scores: np.ndarray
    r_scores: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=np.float64).reshape(-1) for a in (self.h_scores, self.r_scores, self.targets)]
        if len({a.size for a in arrays}) != 1:
            raise ValueError("h_scores, r_scores and targets must have equal lengths")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("scored batch contains non-finite values")
        for name, a in zip(("h_scores", "r_scores", "targets"), arrays):
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.h_scores.size

    def subset(self, mask) -> "ScoredBatch":
        return ScoredBatch(self.h_scores[mask], self.r_scores[mask], self.targets[mask])


@dataclass
class RiskCoverageCurve:
    metric: str
    mode: str  # "learned" or "random"
    fractions: list = field(default_factory=list)
    values: list = field(default_factory=list)
    n_accepted: list = field(default_factory=list)

    def rows(self):
        for f, v, k in zip(self.fractions, self.values, self.n_accepted):
            yield f, v, self.mode, self.metric, k


def _check_fractions(fractions):
    fractions = [float(f) for f in fractions]
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"rejection fraction must lie in [0, 1], got {f}")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be strictly increasing")
    return fractions


def _metric_on(metric, batch, mask, fraction):
    try:
        return compute_metric(metric, batch.h_scores[mask], batch.targets[mask])
    except MetricError as exc:
        raise MetricError(f"{metric} undefined at rejection fraction {fraction}: {exc}") from None


def risk_coverage_curve(
    batch: ScoredBatch,
    fractions,
    metric: str,
    rejection: str = "learned",
    trials: int = 200,
    seed: int = 0,
) -> RiskCoverageCurve:
    """Metric on the accepted subset at each rejection fraction.

    ``learned`` drops the lowest rejector scores; ``random`` averages the
    metric over ``trials`` uniformly random rejection sets of the same size,
    trial ``t`` at fraction index ``i`` drawing from stream ``(seed, i, t)``.
    """
    fractions = _check_fractions(fractions)
    curve = RiskCoverageCurve(metric, rejection)
    n = batch.n
    for i, f in enumerate(fractions):
        k = n_rejected(n, f)
        if rejection == "learned":
            value = _metric_on(metric, batch, reject_fraction_mask(batch.r_scores, f), f)
        elif rejection == "random":
            if trials < 1:
                raise ValueError("random rejection needs at least one trial")
            acc = 0.0
            for t in range(trials):
                mask = np.ones(n, dtype=bool)
                mask[RandomStream(seed, (i, t)).permutation(n)[:k]] = False
                acc += _metric_on(metric, batch, mask, f)
            value = acc / trials
        else:
            raise ValueError(f"unknown rejection mode {rejection!r}")
        curve.fractions.append(f)
        curve.values.append(float(value))
        curve.n_accepted.append(n - k)
    return curve


def accepted_metric(batch: ScoredBatch, metric: str) -> float | None:
    """Metric over ``r > 0`` examples, or None when undefined there."""
    mask = accept_mask(batch.r_scores)
    try:
        return compute_metric(metric, batch.h_scores[mask], batch.targets[mask])
    except MetricError:
        return None
