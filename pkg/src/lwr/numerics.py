"""Dense linear algebra helpers and the seeded random stream.

Matrices are plain ``float64`` NumPy arrays in C (row-major) order.

Random numbers come from :class:`RandomStream`, a PCG64 bit generator seeded
through :class:`numpy.random.SeedSequence`. Only the raw 64-bit output of the
bit generator is consumed; the transforms to floating point are fixed here:

* uniform on ``[0, 1)``: top 53 bits of a raw word times ``2**-53``
* standard normal: Box-Muller on pairs of uniforms, cosine branch first

Both PCG64 raw output and SeedSequence hashing are specified algorithms, so a
given seed yields the same draws on every platform. Child streams for folds,
repeats and trials are derived from ``(seed, key...)`` with ``spawn_key``.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Return ``values`` as a finite 2-D C-contiguous float64 array."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def mat_vec(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix shape {W.shape} vs vector shape {x.shape}"
        )
    return W @ x


class RandomStream:
    """Deterministic single-owner random stream.

    Never share one instance between concurrent tasks; derive a child with
    :meth:`child` instead.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._bits = np.random.PCG64(seq)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self.key})"

    def child(self, *key: int) -> "RandomStream":
        """Independent stream derived from this stream's seed and ``key``."""
        return RandomStream(self.seed, self.key + tuple(int(k) for k in key))

    def raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(int(n))

    def random(self, n: int) -> np.ndarray:
        """``n`` uniforms on ``[0, 1)`` with 53 bits of resolution."""
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        words = self.raw(n) if n else np.empty(0, dtype=np.uint64)
        return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def standard_normal(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        pairs = (n + 1) // 2
        u = self.random(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = _TWO_PI * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = radius * np.cos(angle)
        out[:, 1] = radius * np.sin(angle)
        return out.reshape(-1)[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Uniformly random permutation of ``range(n)``."""
        # stable sort of uniforms; ties are measure-zero and resolved by index
        return np.argsort(self.random(n), kind="stable")


def sample_normal(rng: RandomStream, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return mean + std * rng.standard_normal(n)


def sample_uniform(rng: RandomStream, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    if lo > hi:
        raise ValueError(f"empty interval: lo={lo} > hi={hi}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return lo + (hi - lo) * rng.random(n)


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for the task identified by ``key`` under ``seed``."""
    seq = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, np.uint64)[0])
