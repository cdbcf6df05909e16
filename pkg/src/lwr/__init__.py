"""Learning with rejection: a predictor and a rejector trained jointly.

Both networks are optimized under the convex meta-loss
``max(0, r + l, c * (1 - r))``; a prediction is accepted when ``r(x) > 0``.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
