"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback gives identical
results. Set SPARSEKIT_PURE=1 to force the fallback (used by the kernel
benchmark and by tests that cross-check the two backends).
"""

import os

from ._fallback import mulmod
from . import _fallback

if os.environ.get("SPARSEKIT_PURE"):
    _impl = _fallback
else:
    try:
        from . import _polyhash as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND_NAME
poly_bucket_batch = _impl.poly_bucket_batch
poly_eval_batch = _impl.poly_eval_batch

__all__ = ["BACKEND", "poly_bucket_batch", "poly_eval_batch", "mulmod"]
