"""Kernel backend selection.

The compiled Cython core is used when it imports; otherwise the numpy
kernels are used. Set ``QCREDIT_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if os.environ.get("QCREDIT_BACKEND", "").lower() == "python" or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

kernels = BACKENDS[BACKEND]


def available_backends():
    return sorted(BACKENDS)


def get_kernels(name=None):
    """Return the kernel module ``name`` (default: the selected backend)."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}") from None
