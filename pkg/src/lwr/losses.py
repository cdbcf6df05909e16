"""Prediction losses and the rejection meta-loss.

The meta-loss couples a prediction loss ``l >= 0`` with a rejection score
``r`` and a rejection cost ``c > 0``::

    L = max(0, r + l, c * (1 - r))

It is convex in ``(l, r)``. For a perfectly predicted example (``l = 0``) it
is minimized at ``r = c / (1 + c)``, where ``L = c / (1 + c)``.

Subgradients follow the active branch: accept ``(dL/dl, dL/dr) = (1, 1)``,
reject ``(0, -c)``, zero ``(0, 0)``. On ties the priority is
accept > reject > zero, so gradient keeps reaching both networks at the kinks.
Prediction-loss kinks take the flat-side subgradient 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._pykernels import BRANCH_ACCEPT, BRANCH_REJECT, BRANCH_ZERO, EPS_INSENSITIVE, HINGE, SQUARED

BRANCH_NAMES = {BRANCH_ZERO: "zero", BRANCH_ACCEPT: "accept", BRANCH_REJECT: "reject"}

DEFAULT_EPSILON = 0.1
DEFAULT_C = 2.0


@dataclass(frozen=True)
class PredictionLossKind:
    name: str
    epsilon: float = DEFAULT_EPSILON

    _CODES = {"hinge": HINGE, "squared_error": SQUARED, "epsilon_insensitive": EPS_INSENSITIVE}

    def __post_init__(self):
        if self.name not in self._CODES:
            raise ValueError(f"unknown prediction loss {self.name!r}; expected one of {sorted(self._CODES)}")
        if self.name == "epsilon_insensitive" and not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def code(self) -> int:
        return self._CODES[self.name]

    @property
    def is_classification(self) -> bool:
        return self.name == "hinge"

    def to_dict(self) -> dict:
        return {"name": self.name, "epsilon": self.epsilon}

    @classmethod
    def parse(cls, obj) -> "PredictionLossKind":
        if isinstance(obj, PredictionLossKind):
            return obj
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj["name"], float(obj.get("epsilon", DEFAULT_EPSILON)))


HINGE_LOSS = PredictionLossKind("hinge")
SQUARED_LOSS = PredictionLossKind("squared_error")


@dataclass(frozen=True)
class LossValue:
    l: float
    dl_dh: float


@dataclass(frozen=True)
class MetaLossValue:
    L: float
    dL_dl: float
    dL_dr: float
    active_branch: str


def check_hinge_labels(y):
    y = np.asarray(y, dtype=np.float64)
    bad = np.unique(y[(y != 1.0) & (y != -1.0)])
    if bad.size:
        raise ValueError(f"hinge loss needs labels in {{-1, +1}}; got {bad.tolist()}")


def prediction_loss(kind: PredictionLossKind, h: float, y: float) -> LossValue:
    l, dl = prediction_loss_batch(kind, np.array([h], dtype=np.float64), np.array([y], dtype=np.float64))
    return LossValue(float(l[0]), float(dl[0]))


def prediction_loss_batch(kind: PredictionLossKind, h, y):
    """Vectorized ``(l, dl/dh)``."""
    if kind.code == HINGE:
        check_hinge_labels(y)
    l, dl = kernels.prediction_loss(kind.code, np.atleast_1d(h), np.atleast_1d(y), kind.epsilon)
    return np.asarray(l), np.asarray(dl)


def _check_meta_args(l, c):
    if not c > 0:
        raise ValueError(f"rejection cost c must be > 0, got {c}")
    if np.any(np.asarray(l) < 0):
        raise ValueError("prediction loss l must be >= 0")


def meta_loss(l: float, r: float, c: float) -> MetaLossValue:
    _check_meta_args(l, c)
    value, d_l, d_r, branch = kernels.meta_loss(np.array([l], dtype=np.float64),
                                                np.array([r], dtype=np.float64), float(c))
    return MetaLossValue(float(value[0]), float(d_l[0]), float(d_r[0]), BRANCH_NAMES[int(branch[0])])


def meta_loss_batch(l, r, c: float):
    """Vectorized ``(L, dL/dl, dL/dr, branch_codes)``."""
    _check_meta_args(l, c)
    value, d_l, d_r, branch = kernels.meta_loss(np.atleast_1d(l), np.atleast_1d(r), float(c))
    return np.asarray(value), np.asarray(d_l), np.asarray(d_r), np.asarray(branch)


def grid_axis(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ValueError(f"a grid axis needs >= 2 steps, got {steps}")
    if not lo < hi:
        raise ValueError(f"grid axis needs lo < hi, got [{lo}, {hi}]")
    return np.linspace(lo, hi, int(steps))


def meta_loss_grid(c: float, r_range=(-2.0, 2.0, 101), l_range=(0.0, 4.0, 101)):
    """Meta-loss over an ``l`` x ``r`` grid.

    Returns ``(grid, l_values, r_values)`` with ``grid[i, j] = L(l_i, r_j)``.
    """
    r_values = grid_axis(*r_range)
    l_values = grid_axis(*l_range)
    if l_values[0] < 0:
        raise ValueError("prediction loss axis must be >= 0")
    ll, rr = np.meshgrid(l_values, r_values, indexing="ij")
    value, _, _, _ = meta_loss_batch(ll.ravel(), rr.ravel(), c)
    return value.reshape(ll.shape), l_values, r_values


def optimal_rejection_score(c: float) -> float:
    """Minimizer of ``L(0, r, c)`` over ``r``."""
    return c / (1.0 + c)
