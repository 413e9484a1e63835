"""JIT switch for the numeric kernels.

Every hot kernel in :mod:`modelgrowth.kernels` exists twice: a scalar-loop
version compiled with numba and a vectorized numpy version. Which one the
package uses is decided once, at import time:

* ``MODELGROWTH_JIT=0`` (or ``false``/``off``/``no``) forces the numpy path.
* Otherwise numba is used if it can be imported.

Both versions stay importable under explicit names so tests and the
benchmark can compare them side by side.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("MODELGROWTH_JIT", "1").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and _FLAG not in {"0", "false", "off", "no"}

_JIT_OPTIONS = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    Without numba the plain Python function is returned so the loop version
    still runs (slowly) and can be used as a reference.
    """
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(**_JIT_OPTIONS)(fn)


def backend() -> str:
    return "numba" if USE_JIT else "numpy"


def pick(jit_version, numpy_version):
    return jit_version if USE_JIT else numpy_version
