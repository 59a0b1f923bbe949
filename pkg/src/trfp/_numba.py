"""Numba availability switch shared by all hot kernels.

Set ``TRFP_DISABLE_NUMBA=1`` in the environment before import to force the
pure-numpy fallback paths (also used automatically when numba is not
installed).  The flag is read once at import time.
"""

import os

_disabled = os.environ.get("TRFP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

if not _disabled:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a no-op decorator.

    Kernels decorated with this must still be valid (slow) Python, but the
    fallback code paths never call them; they exist so the module imports
    cleanly either way.
    """
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco
