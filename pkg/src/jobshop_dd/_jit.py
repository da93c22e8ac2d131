"""Optional numba acceleration.

Set ``JOBSHOP_DD_NO_JIT=1`` to force the pure-numpy kernels, which is useful
for debugging and for platforms where numba is unavailable.
"""

import os

_flag = os.environ.get("JOBSHOP_DD_NO_JIT", "").strip().lower()

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    nb = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _flag not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return nb.njit(*args, cache=True, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda func: func
