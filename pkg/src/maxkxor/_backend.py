"""Kernel backend selection.

The compiled extension is preferred. ``MAXKXOR_BACKEND=python`` forces the
numpy fallback, ``MAXKXOR_BACKEND=cython`` makes a missing extension an error.
"""
from __future__ import annotations

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)


def _select():
    choice = os.environ.get("MAXKXOR_BACKEND", "auto").lower()
    if choice == "python":
        return _pykernels
    try:
        from . import _ckernels
    except ImportError:
        if choice == "cython":
            raise
        log.debug("compiled kernels unavailable, using numpy fallback")
        return _pykernels
    return _ckernels


kernels = _select()


def available_backends():
    """Return the kernel modules importable in this environment."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
