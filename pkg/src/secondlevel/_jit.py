"""Numba shim.

Set ``SECONDLEVEL_NO_NUMBA=1`` to force the pure-numpy kernels. When numba
is missing the numpy path is selected automatically.
"""
import os
import warnings

_disabled = os.environ.get("SECONDLEVEL_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False
    warnings.warn("numba is not installed - using the numpy kernels")

    def njit(*args, **kw):
        if len(args) == 1 and callable(args[0]) and not kw:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and not _disabled

__all__ = ["njit", "HAVE_NUMBA", "USE_NUMBA"]
