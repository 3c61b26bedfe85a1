"""Numba/numpy kernel dispatch.

Hot numeric kernels ship in two versions: a numba ``@njit`` build and a
pure-numpy fallback.  The fallback is selected by setting the environment
variable ``ILPEDA_NO_NUMBA=1`` (any of ``1/true/yes``), or automatically
when numba is not importable.  ``benchmarks/bench_kernels.py`` compares the
two paths.
"""

import os


def _flag_set(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes")


try:
    from numba import njit  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def use_numba() -> bool:
    """True when the numba kernel path is active."""
    return _HAVE_NUMBA and not _flag_set("ILPEDA_NO_NUMBA")
