"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
NumPy reference in ``_pykernels`` is used. Set ``LWR_PURE_PYTHON=1`` to force
the NumPy backend. Both expose the same functions.
"""

import os

from . import _pykernels

if os.environ.get("LWR_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward
prediction_loss = _impl.prediction_loss
meta_loss = _impl.meta_loss
adam_step = _impl.adam_step
sgd_step = _impl.sgd_step
auc_midrank = _impl.auc_midrank


def available_backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
