"""Feature standardization and random Fourier features for the RBF kernel.

The random feature map is ``z(x) = sqrt(2/D) * cos(omega @ x + phase)`` with
``omega ~ N(0, 2*gamma*I)`` and ``phase ~ U[0, 2*pi)``, so that
``E[z(x) . z(y)] = exp(-gamma * ||x - y||^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import RandomStream, sample_normal, sample_uniform

DEFAULT_RFF_DIM = 1024


@dataclass(frozen=True)
class Standardizer:
    """Column-wise ``(x - mean) / std`` with population std (``ddof=0``)."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got shape {X.shape}")
        return (X - self.mean) / self.std

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got shape {Z.shape}")
        return Z * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, obj) -> "Standardizer":
        return cls(np.array(obj["mean"], dtype=np.float64), np.array(obj["std"], dtype=np.float64))


def fit_standardizer(X) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("cannot fit a standardizer on an empty matrix")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a standardizer")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns pass through centred but unscaled
    std = np.where(std > 0, std, 1.0)
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, x) -> np.ndarray:
    return s.apply(x)


@dataclass(frozen=True)
class RffMap:
    omega: np.ndarray  # (D, d)
    phase: np.ndarray  # (D,)
    gamma: float

    @property
    def input_dim(self) -> int:
        return self.omega.shape[1]

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} features, got shape {X.shape}")
        return math.sqrt(2.0 / self.dim) * np.cos(X @ self.omega.T + self.phase)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "omega": self.omega.tolist(), "phase": self.phase.tolist()}

    @classmethod
    def from_dict(cls, obj) -> "RffMap":
        omega = np.array(obj["omega"], dtype=np.float64)
        return cls(omega, np.array(obj["phase"], dtype=np.float64), float(obj["gamma"]))


def sample_rff(d: int, D: int, gamma: float, rng: RandomStream) -> RffMap:
    if d < 1 or D < 1:
        raise ValueError(f"input and feature dims must be >= 1, got d={d}, D={D}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    omega = sample_normal(rng, D * d, 0.0, math.sqrt(2.0 * gamma)).reshape(D, d)
    phase = sample_uniform(rng, D, 0.0, 2.0 * math.pi)
    return RffMap(omega, phase, float(gamma))


def apply_rff(rff: RffMap, x) -> np.ndarray:
    return rff.apply(x)


def rbf_kernel(x, y, gamma: float) -> float:
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return math.exp(-gamma * float(diff @ diff))


def median_heuristic_gamma(X, max_rows: int = 1000) -> float:
    """``1 / (2 * median^2)`` of pairwise Euclidean distances between rows.

    Only the first ``max_rows`` rows are used, which keeps it deterministic.
    """
    X = np.asarray(X, dtype=np.float64)[:max_rows]
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows for the median heuristic")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    iu = np.triu_indices(X.shape[0], k=1)
    dist = np.sqrt(np.maximum(d2[iu], 0.0))
    med = float(np.median(dist))
    if not med > 0:
        return 1.0
    return 1.0 / (2.0 * med * med)
