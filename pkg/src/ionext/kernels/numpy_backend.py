"""Pure-NumPy temporal convolution kernels (fallback backend).

Same contract as the compiled backend: arrays are (batch, channels, time),
padding is symmetric zero padding, depthwise convs are stride 1.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _pad_time(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad)))


def conv1d_forward(x: np.ndarray, w: np.ndarray, stride: int = 1,
                   pad: int = 0) -> np.ndarray:
    """Dense conv: x (B,Ci,T), w (Co,Ci,K) -> (B,Co,To), To=(T+2p-K)//s+1."""
    xp = _pad_time(np.ascontiguousarray(x), pad)
    k = w.shape[2]
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]  # (B,Ci,To,K)
    y = np.tensordot(win, w, axes=([1, 3], [1, 2]))              # (B,To,Co)
    return np.ascontiguousarray(y.transpose(0, 2, 1))


def conv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                    stride: int = 1, pad: int = 0):
    """Gradients of conv1d_forward; returns (dx, dw)."""
    xp = _pad_time(np.ascontiguousarray(x), pad)
    k = w.shape[2]
    to = dy.shape[2]
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    dw = np.tensordot(dy, win, axes=([0, 2], [0, 2]))            # (Co,Ci,K)
    dxp = np.zeros_like(xp)
    for kk in range(k):
        # every output position t pulls input position t*stride+kk
        contrib = np.tensordot(dy, w[:, :, kk], axes=([1], [0]))  # (B,To,Ci)
        dxp[:, :, kk:kk + stride * (to - 1) + 1:stride] += contrib.transpose(0, 2, 1)
    t = x.shape[2]
    dx = dxp[:, :, pad:pad + t] if pad else dxp
    return np.ascontiguousarray(dx), dw


def dwconv1d_forward(x: np.ndarray, w: np.ndarray, pad: int = 0) -> np.ndarray:
    """Depthwise stride-1 conv: x (B,C,T), w (C,K) -> (B,C,T+2p-K+1)."""
    xp = _pad_time(np.ascontiguousarray(x), pad)
    k = w.shape[1]
    win = sliding_window_view(xp, k, axis=2)                     # (B,C,To,K)
    return np.einsum("bctk,ck->bct", win, w)


def dwconv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                      pad: int = 0):
    """Gradients of dwconv1d_forward; returns (dx, dw)."""
    xp = _pad_time(np.ascontiguousarray(x), pad)
    k = w.shape[1]
    to = dy.shape[2]
    win = sliding_window_view(xp, k, axis=2)
    dw = np.einsum("bctk,bct->ck", win, dy)
    dxp = np.zeros_like(xp)
    for kk in range(k):
        dxp[:, :, kk:kk + to] += dy * w[None, :, kk, None]
    t = x.shape[2]
    dx = dxp[:, :, pad:pad + t] if pad else dxp
    return np.ascontiguousarray(dx), dw
