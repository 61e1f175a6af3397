"""Pick the simulation kernel at import time.

The compiled Cython kernel is used when it was built; otherwise (or when
``RADAR_BACKEND=python`` is set) the NumPy interpreter is used. Both give
bitwise-identical results.
"""

import os

from radar.simulation import _fallback

_choice = os.environ.get("RADAR_BACKEND", "auto").lower()
kernel = _fallback
if _choice != "python":
    try:
        from radar.simulation import _kernel as kernel  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise
        kernel = _fallback

BACKEND = kernel.BACKEND


def get(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for default)."""
    if name is None:
        return kernel
    if name == "python":
        return _fallback
    if name == "cython":
        from radar.simulation import _kernel

        return _kernel
    raise ValueError(f"unknown backend {name!r}")
