"""Wrapper around the compiled `_conv1d` extension.

Only the depthwise kernels run through the compiled loops: benchmarks show
them 3-4x faster than the NumPy sliding-window path, while dense
channel-mixing convolutions are gemm-shaped and the BLAS-backed NumPy
formulation beats scalar loops by an order of magnitude, so those delegate.
Importing this module fails cleanly when the extension was not built.
"""

import numpy as np

from . import _conv1d as _c
from .numpy_backend import conv1d_backward, conv1d_forward  # noqa: F401 - delegated


def _pad_time(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return np.ascontiguousarray(x)
    return np.pad(np.ascontiguousarray(x), ((0, 0), (0, 0), (pad, pad)))


def conv1d_forward_loops(x: np.ndarray, w: np.ndarray, stride: int = 1,
                         pad: int = 0) -> np.ndarray:
    """Raw compiled dense conv; kept for the benchmark that justifies the
    delegation above, and for equivalence tests."""
    xp = _pad_time(x, pad)
    w = np.ascontiguousarray(w)
    b, _, tp = xp.shape
    co, _, k = w.shape
    to = (tp - k) // stride + 1
    y = np.zeros((b, co, to), dtype=x.dtype)
    _c.conv1d_fwd(xp, w, y, stride)
    return y


def conv1d_backward_loops(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                          stride: int = 1, pad: int = 0):
    xp = _pad_time(x, pad)
    w = np.ascontiguousarray(w)
    dy = np.ascontiguousarray(dy)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    _c.conv1d_bwd(xp, w, dy, dxp, dw, stride)
    t = x.shape[2]
    dx = dxp[:, :, pad:pad + t] if pad else dxp
    return np.ascontiguousarray(dx), dw


def dwconv1d_forward(x: np.ndarray, w: np.ndarray, pad: int = 0) -> np.ndarray:
    xp = _pad_time(x, pad)
    w = np.ascontiguousarray(w)
    b, c, tp = xp.shape
    k = w.shape[1]
    y = np.zeros((b, c, tp - k + 1), dtype=x.dtype)
    _c.dwconv1d_fwd(xp, w, y)
    return y


def dwconv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                      pad: int = 0):
    xp = _pad_time(x, pad)
    w = np.ascontiguousarray(w)
    dy = np.ascontiguousarray(dy)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    _c.dwconv1d_bwd(xp, w, dy, dxp, dw)
    t = x.shape[2]
    dx = dxp[:, :, pad:pad + t] if pad else dxp
    return np.ascontiguousarray(dx), dw
