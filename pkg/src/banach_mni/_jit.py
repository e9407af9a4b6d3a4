"""Optional numba acceleration for the iteration kernels.

Kernels are written in a numpy subset that numba can compile. Setting
``BANACH_MNI_DISABLE_JIT=1`` in the environment (before import) runs the
very same functions uncompiled, as plain numpy code. Every compiled
kernel keeps its uncompiled twin on ``.py_func`` so both paths can be
compared side by side.
"""

import os

DISABLE_ENV = "BANACH_MNI_DISABLE_JIT"


def _flag_set(value):
    return value.strip().lower() not in ("", "0", "false", "no")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and not _flag_set(os.environ.get(DISABLE_ENV, ""))


def kernel(func):
    """Compile ``func`` with ``numba.njit`` unless JIT is disabled."""
    if JIT_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    func.py_func = func
    return func
