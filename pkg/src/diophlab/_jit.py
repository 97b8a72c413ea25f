"""Numba switch.

Kernels are compiled with ``numba.njit`` unless the environment variable
``DIOPHLAB_DISABLE_NUMBA`` is set to a truthy value or numba cannot be
imported, in which case the pure-numpy implementations in
:mod:`diophlab.kernels` are used instead.
"""
import os

_FLAG = os.environ.get("DIOPHLAB_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    if DISABLED_BY_ENV:
        raise ImportError("disabled by DIOPHLAB_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(func):
            return func

        return deco


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
