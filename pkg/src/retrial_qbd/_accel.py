"""Numba switch.

Kernels are compiled with ``numba.njit`` unless the environment variable
``RETRIAL_QBD_DISABLE_NUMBA`` is set to a truthy value (or numba cannot be
imported), in which case the very same functions run as plain Python over
numpy arrays.  The choice is made once, at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_REQUESTED = os.environ.get("RETRIAL_QBD_DISABLE_NUMBA", "").strip().lower() in _FALSY

try:
    if not NUMBA_REQUESTED:
        raise ImportError
    import numba
except ImportError:
    numba = None

NUMBA_ENABLED = numba is not None


def kernel(fn):
    """Decorate a hot loop: ``njit`` when numba is active, identity otherwise."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def py_func(fn):
    """The undecorated Python function behind a kernel."""
    return getattr(fn, "py_func", fn)
