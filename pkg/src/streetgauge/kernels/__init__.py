"""Collapsed-Gibbs sweep kernels.

A Cython build of the sweep is used when available; otherwise a pure-Python
implementation with identical arithmetic takes over.  Both produce
bit-identical topic assignments and count tables for the same RNG state.
"""

from __future__ import annotations

from streetgauge.kernels import gibbs_py

try:
    from streetgauge.kernels import _gibbs as _compiled

    HAVE_COMPILED = True
except ImportError:  # built without a C toolchain, or wheel-only install
    _compiled = None
    HAVE_COMPILED = False


def get_backend(name: str = "auto"):
    """Resolve a kernel module by name: 'auto', 'compiled', or 'python'."""
    if name == "auto":
        return _compiled if HAVE_COMPILED else gibbs_py
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled kernel unavailable; reinstall with a C toolchain "
                "or request backend='python'"
            )
        return _compiled
    if name == "python":
        return gibbs_py
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "python"


__all__ = ["HAVE_COMPILED", "backend_name", "get_backend", "gibbs_py"]
