"""
Numba switch for the hot kernels.

Set ``CFLIMSUP_DISABLE_NUMBA=1`` to force the pure-numpy paths (useful for
debugging and for checking that both paths agree).  ``CFLIMSUP_THREADS``
caps numba's thread pool.
"""
import os
import warnings

_flag = os.environ.get("CFLIMSUP_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, else identity.

    Kernels are always compiled when numba exists (even with the env flag
    set) so the benchmark can compare both paths in one process; the flag
    only changes which path the public functions dispatch to.
    """
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def set_threads(n=None):
    if n is None:
        env = os.environ.get("CFLIMSUP_THREADS")
        n = int(env) if env else None
    if n and HAVE_NUMBA:
        with warnings.catch_warnings():     # threading-layer probes are noisy
            warnings.simplefilter("ignore")
            _numba.set_num_threads(min(n, _numba.config.NUMBA_NUM_THREADS))


def backend():
    return "numba" if USE_NUMBA else "numpy"
