# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled 1-D convolution kernels (dense strided + depthwise).

All functions write into caller-allocated output arrays. Inputs are padded
by the caller; these loops compute plain valid cross-correlations.
Single-threaded by design: results must be bit-reproducible run to run.
"""

ctypedef fused floating:
    float
    double


def conv1d_fwd(floating[:, :, ::1] x, floating[:, :, ::1] w,
               floating[:, :, ::1] y, Py_ssize_t stride):
    """y[b,o,t] += sum_{c,k} w[o,c,k] * x[b,c,t*stride+k]."""
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1]
    cdef Py_ssize_t Co = w.shape[0], K = w.shape[2], To = y.shape[2]
    cdef Py_ssize_t b, co, ci, k, t
    cdef floating wv
    with nogil:
        for b in range(B):
            for co in range(Co):
                for ci in range(Ci):
                    for k in range(K):
                        wv = w[co, ci, k]
                        for t in range(To):
                            y[b, co, t] += wv * x[b, ci, t * stride + k]


def conv1d_bwd(floating[:, :, ::1] x, floating[:, :, ::1] w,
               floating[:, :, ::1] dy, floating[:, :, ::1] dx,
               floating[:, :, ::1] dw, Py_ssize_t stride):
    """Accumulates dx (padded coordinates) and dw for conv1d_fwd."""
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1]
    cdef Py_ssize_t Co = w.shape[0], K = w.shape[2], To = dy.shape[2]
    cdef Py_ssize_t b, co, ci, k, t
    cdef floating wv, acc
    with nogil:
        for b in range(B):
            for co in range(Co):
                for ci in range(Ci):
                    for k in range(K):
                        wv = w[co, ci, k]
                        acc = 0
                        for t in range(To):
                            dx[b, ci, t * stride + k] += wv * dy[b, co, t]
                            acc += x[b, ci, t * stride + k] * dy[b, co, t]
                        dw[co, ci, k] += acc


def dwconv1d_fwd(floating[:, :, ::1] x, floating[:, ::1] w,
                 floating[:, :, ::1] y):
    """Per-channel stride-1 convolution: y[b,c,t] += sum_k w[c,k]*x[b,c,t+k]."""
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t K = w.shape[1], To = y.shape[2]
    cdef Py_ssize_t b, c, k, t
    cdef floating wv
    with nogil:
        for b in range(B):
            for c in range(C):
                for k in range(K):
                    wv = w[c, k]
                    for t in range(To):
                        y[b, c, t] += wv * x[b, c, t + k]


def dwconv1d_bwd(floating[:, :, ::1] x, floating[:, ::1] w,
                 floating[:, :, ::1] dy, floating[:, :, ::1] dx,
                 floating[:, ::1] dw):
    """Accumulates dx (padded coordinates) and dw for dwconv1d_fwd."""
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t K = w.shape[1], To = dy.shape[2]
    cdef Py_ssize_t b, c, k, t
    cdef floating wv, acc
    with nogil:
        for b in range(B):
            for c in range(C):
                for k in range(K):
                    wv = w[c, k]
                    acc = 0
                    for t in range(To):
                        dx[b, c, t + k] += wv * dy[b, c, t]
                        acc += x[b, c, t + k] * dy[b, c, t]
                    dw[c, k] += acc
