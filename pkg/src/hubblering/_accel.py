"""Numba switch.

Hot kernels are decorated with :func:`njit` from this module. Setting
``HUBBLERING_DISABLE_NUMBA=1`` (or running without numba installed) turns the
decorator into a no-op so the same source runs as plain Python/numpy.
"""
import os

_FLAG = os.environ.get("HUBBLERING_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def opts():
    return dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity otherwise.

    The compiled dispatcher keeps the original function on ``.py_func``; the
    fallback attaches the same attribute so callers can always reach the
    pure-Python version.
    """
    if args and callable(args[0]) and len(args) == 1 and not kwargs:
        return njit()(args[0])

    def wrapper(f):
        if HAS_NUMBA:
            kw = opts()
            kw.update(kwargs)
            return numba.njit(**kw)(f)
        f.py_func = f
        return f

    return wrapper


def backend():
    return "numba" if HAS_NUMBA else "python"
