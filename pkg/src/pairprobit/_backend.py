"""Kernel backend selection.

The hot numerical kernels exist twice: a compiled Cython extension
(``pairprobit._ckernels``) and a pure NumPy fallback
(``pairprobit._pykernels``) with identical interfaces.  The compiled one is
preferred when importable; ``PAIRPROBIT_BACKEND=python|compiled`` forces a
choice.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None


def available_backends() -> dict:
    """Name -> module map of the kernel backends usable in this install."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["compiled"] = _ckernels
    return out


def select_backend(name: str | None = None):
    """Resolve a backend module from an explicit name or the environment."""
    if name is None:
        name = os.environ.get("PAIRPROBIT_BACKEND")
    if name is None:
        return _ckernels if _ckernels is not None else _pykernels
    backends = available_backends()
    if name not in backends:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {sorted(backends)}")
    return backends[name]
