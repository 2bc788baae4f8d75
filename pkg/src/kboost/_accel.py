"""Backend switch for the hot loops.

Every hot kernel in the package exists twice: a numba-compiled version and a
pure-numpy version.  The default backend is numba when it imports; setting
``KBOOST_DISABLE_NUMBA=1`` in the environment forces the numpy path.  Both
versions stay importable in one process so they can be benchmarked and
cross-checked against each other.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("KBOOST_DISABLE_NUMBA", "0").strip().lower() in {"1", "true", "yes", "on"}
_backend = "numba" if (HAVE_NUMBA and not _DISABLED) else "numpy"


def backend():
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name):
    """Switch the active backend at runtime; returns the previous name."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous


def njit(fn):
    """Compile ``fn`` lazily with numba; the plain function if numba is absent."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
