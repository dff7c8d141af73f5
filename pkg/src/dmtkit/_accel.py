"""Backend selection for the hot numeric kernels.

Numba is used when it imports cleanly and ``DMTKIT_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``).  Otherwise every kernel falls back to its
vectorised numpy twin.  The flag is read once, at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _disabled_by_env() -> bool:
    return os.environ.get("DMTKIT_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    The compiled function is always produced when numba exists, even if the
    env flag disables it as the default backend, so benchmarks and tests can
    still compare both paths.
    """
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
