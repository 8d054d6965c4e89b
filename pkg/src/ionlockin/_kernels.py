"""Backend selection for the Monte Carlo trial kernel.

The compiled Cython kernel is preferred when its extension module built;
otherwise the vectorized numpy implementation is used. Both satisfy the
same bit-exact contract, so the choice affects speed only. Tests and the
benchmark can request a backend explicitly.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels_cy
    HAVE_COMPILED = True
except ImportError:  # extension not built
    _kernels_cy = None
    HAVE_COMPILED = False

DEFAULT_BACKEND = "cython" if HAVE_COMPILED else "numpy"


def available_backends():
    return ("cython", "numpy") if HAVE_COMPILED else ("numpy",)


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name is None:
        name = DEFAULT_BACKEND
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel not available; build the "
                               "extension or use backend='numpy'")
        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}")
