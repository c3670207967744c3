"""Temporal 1-D convolution kernels with a compiled core and a NumPy fallback.

The strided dense convolutions (stem, downsampling) and the multi-scale
depthwise convolutions are the hot inner loops of the whole pipeline. They
exist twice:

* ``ionext.kernels._conv1d``  — Cython extension, built at install time;
* ``ionext.kernels.numpy_backend`` — pure NumPy, always importable.

The compiled backend is selected automatically when present. Set
``IONEXT_KERNELS=numpy`` or ``IONEXT_KERNELS=cython`` to force a backend
(forcing ``cython`` raises if the extension is missing). Pointwise
(kernel-size-1) channel mixing is a plain matrix product handled directly
by the layers and is deliberately not part of this surface.

Both backends implement:

    conv1d_forward(x, w, stride, pad)       (B,Ci,T) -> (B,Co,To)
    conv1d_backward(x, w, dy, stride, pad)  -> (dx, dw)
    dwconv1d_forward(x, w, pad)             (B,C,T) -> (B,C,To), stride 1
    dwconv1d_backward(x, w, dy, pad)        -> (dx, dw)

Run ``python benchmarks/bench_kernels.py`` to compare them.
"""

import os

from . import numpy_backend

_choice = os.environ.get("IONEXT_KERNELS", "auto").lower()
if _choice not in ("auto", "cython", "numpy"):
    raise ValueError(f"IONEXT_KERNELS must be auto|cython|numpy, got {_choice!r}")

_impl = None
if _choice in ("auto", "cython"):
    try:
        from . import cython_backend as _impl
    except ImportError:
        if _choice == "cython":
            raise ImportError(
                "IONEXT_KERNELS=cython but the compiled extension is not "
                "available; reinstall with a C compiler or unset the variable"
            ) from None
        _impl = None
if _impl is None:
    _impl = numpy_backend

BACKEND = "numpy" if _impl is numpy_backend else "cython"

conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
dwconv1d_forward = _impl.dwconv1d_forward
dwconv1d_backward = _impl.dwconv1d_backward


def backend_name() -> str:
    """Name of the kernel backend selected at import ('cython' or 'numpy')."""
    return BACKEND


def get_backend(name: str):
    """Return a backend module by name, for benchmarks and equivalence tests."""
    if name == "numpy":
        return numpy_backend
    if name == "cython":
        from . import cython_backend
        return cython_backend
    raise ValueError(f"unknown backend {name!r}")
