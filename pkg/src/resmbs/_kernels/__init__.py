"""Kernel selection: compiled extension when available, NumPy otherwise.

Set ``RESMBS_PURE=1`` to force the pure-Python kernels (used by the
benchmark and the cross-implementation tests).
"""

import os

from . import _pure

if os.environ.get("RESMBS_PURE", "").strip() in ("1", "true", "yes"):
    _impl = _pure
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = _pure

IMPLEMENTATION = _impl.IMPLEMENTATION
lda_estep = _impl.lda_estep
logistic_cd = _impl.logistic_cd

__all__ = ["IMPLEMENTATION", "lda_estep", "logistic_cd", "_pure"]
