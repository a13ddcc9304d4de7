"""Kernel back-end selection.

The compiled extension is preferred; the pure-python implementation is the
fallback.  Set ``QUANCO_PURE_PYTHON=1`` to force the fallback (used by the
back-end comparison benchmark).  ``BACKEND`` reports the active choice.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("QUANCO_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

sa_chain = _impl.sa_chain
exact_argmin = _impl.exact_argmin

__all__ = ["BACKEND", "sa_chain", "exact_argmin"]
