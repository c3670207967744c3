"""Array layers with explicit forward/backward passes.

Everything operates on (batch, channels, time) float arrays. Layers cache
what backward needs only when called with ``training=True``; inference
forwards are side-effect free (except batch-norm statistics, which are
updated only in training mode), so they are safe to run concurrently.
"""

import numpy as np

from .. import kernels

NORM_EPS = 1e-5
BN_MOMENTUM = 0.1


class ShapeError(ValueError):
    """Input shape violates a layer precondition."""


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02,
                 dtype=np.float32) -> np.ndarray:
    """Normal(0, std) truncated at +-2 std, via resampling."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return (out * std).astype(dtype)


class Param:
    """A trainable tensor and its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)


class Module:
    """Minimal tree of parameters/buffers; subclasses define forward/backward."""

    def __init__(self):
        self._params: dict[str, Param] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: dict[str, "Module"] = {}

    def param(self, name: str, value: np.ndarray) -> Param:
        p = Param(value)
        self._params[name] = p
        return p

    def buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        self._buffers[name] = value
        return value

    def child(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = ""):
        for name, p in self._params.items():
            yield (f"{prefix}.{name}" if prefix else name), p
        for cname, c in self._children.items():
            yield from c.named_parameters(f"{prefix}.{cname}" if prefix else cname)

    def named_buffers(self, prefix: str = ""):
        for name, b in self._buffers.items():
            yield (f"{prefix}.{name}" if prefix else name), b
        for cname, c in self._children.items():
            yield from c.named_buffers(f"{prefix}.{cname}" if prefix else cname)

    def modules(self):
        yield self
        for c in self._children.values():
            yield from c.modules()

    def zero_grads(self):
        for _, p in self.named_parameters():
            p.grad[...] = 0.0


class PointwiseConv(Module):
    """Kernel-size-1 convolution: mixes channels at every time step."""

    def __init__(self, rng, c_in: int, c_out: int, dtype=np.float32,
                 bias: bool = True):
        super().__init__()
        self.w = self.param("weight", trunc_normal(rng, (c_out, c_in), dtype=dtype))
        self.b = self.param("bias", np.zeros(c_out, dtype=dtype)) if bias else None

    def forward(self, x, training=False):
        if training:
            self._x = x
        y = np.matmul(self.w.value, x)
        if self.b is not None:
            y += self.b.value[:, None]
        return y

    def backward(self, dy):
        x = self._x
        self.w.grad += np.tensordot(dy, x, axes=([0, 2], [0, 2]))
        if self.b is not None:
            self.b.grad += dy.sum(axis=(0, 2))
        return np.matmul(self.w.value.T, dy)


class Linear(Module):
    """Affine map on (batch, features) vectors."""

    def __init__(self, rng, c_in: int, c_out: int, dtype=np.float32):
        super().__init__()
        self.w = self.param("weight", trunc_normal(rng, (c_out, c_in), dtype=dtype))
        self.b = self.param("bias", np.zeros(c_out, dtype=dtype))

    def forward(self, x, training=False):
        if training:
            self._x = x
        return x @ self.w.value.T + self.b.value

    def backward(self, dy):
        self.w.grad += dy.T @ self._x
        self.b.grad += dy.sum(axis=0)
        return dy @ self.w.value


class TemporalConv(Module):
    """Dense 1-D convolution over time (stem and downsampling layers)."""

    def __init__(self, rng, c_in: int, c_out: int, kernel: int, stride: int,
                 pad: int, dtype=np.float32, bias: bool = True):
        super().__init__()
        self.kernel, self.stride, self.pad = kernel, stride, pad
        self.w = self.param("weight",
                            trunc_normal(rng, (c_out, c_in, kernel), dtype=dtype))
        self.b = self.param("bias", np.zeros(c_out, dtype=dtype)) if bias else None

    def out_length(self, t: int) -> int:
        return (t + 2 * self.pad - self.kernel) // self.stride + 1

    def forward(self, x, training=False):
        if x.shape[2] + 2 * self.pad < self.kernel:
            raise ShapeError(f"time axis {x.shape[2]} too short for "
                             f"kernel {self.kernel} (pad {self.pad})")
        if training:
            self._x = x
        y = kernels.conv1d_forward(x, self.w.value, self.stride, self.pad)
        if self.b is not None:
            y += self.b.value[:, None]
        return y

    def backward(self, dy):
        if self.b is not None:
            self.b.grad += dy.sum(axis=(0, 2))
        dx, dw = kernels.conv1d_backward(self._x, self.w.value, dy,
                                         self.stride, self.pad)
        self.w.grad += dw
        return dx


class DepthwiseConv(Module):
    """Per-channel stride-1 convolution with symmetric 'same' zero padding."""

    def __init__(self, rng, channels: int, kernel: int, dtype=np.float32):
        super().__init__()
        if kernel % 2 == 0:
            raise ValueError(f"depthwise kernel must be odd, got {kernel}")
        self.kernel = kernel
        self.pad = (kernel - 1) // 2
        self.w = self.param("weight", trunc_normal(rng, (channels, kernel), dtype=dtype))
        self.b = self.param("bias", np.zeros(channels, dtype=dtype))

    def forward(self, x, training=False):
        if training:
            self._x = x
        y = kernels.dwconv1d_forward(x, self.w.value, self.pad)
        return y + self.b.value[:, None]

    def backward(self, dy):
        self.b.grad += dy.sum(axis=(0, 2))
        dx, dw = kernels.dwconv1d_backward(self._x, self.w.value, dy, self.pad)
        self.w.grad += dw
        return dx


class BatchNorm(Module):
    """Per-channel normalization over (batch, time).

    Training uses biased batch statistics and updates the running buffers;
    inference uses the stored running statistics.
    """

    def __init__(self, channels: int, dtype=np.float32,
                 eps: float = NORM_EPS, momentum: float = BN_MOMENTUM,
                 shift: bool = True):
        super().__init__()
        self.eps, self.momentum = eps, momentum
        self.scale = self.param("scale", np.ones(channels, dtype=dtype))
        self.shift = (self.param("shift", np.zeros(channels, dtype=dtype))
                      if shift else None)
        self.running_mean = self.buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.running_var = self.buffer("running_var", np.ones(channels, dtype=dtype))

    def begin_stat_refresh(self):
        self._refresh_n = 0

    def end_stat_refresh(self):
        self._refresh_n = None

    def forward(self, x, training=False):
        if training:
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            if getattr(self, "_refresh_n", None) is not None:
                # cumulative average during recalibration passes
                self._refresh_n += 1
                w = 1.0 / self._refresh_n
                self.running_mean[...] = ((1 - w) * self.running_mean
                                          + w * mean).astype(self.running_mean.dtype)
                self.running_var[...] = ((1 - w) * self.running_var
                                         + w * var).astype(self.running_var.dtype)
            else:
                m = self.momentum
                self.running_mean[...] = ((1 - m) * self.running_mean
                                          + m * mean).astype(self.running_mean.dtype)
                self.running_var[...] = ((1 - m) * self.running_var
                                         + m * var).astype(self.running_var.dtype)
        else:
            mean = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[:, None]) * inv[:, None]
        if training:
            self._xhat, self._inv = xhat, inv
        y = self.scale.value[:, None] * xhat
        if self.shift is not None:
            y += self.shift.value[:, None]
        return y

    def backward(self, dy):
        xhat, inv = self._xhat, self._inv
        self.scale.grad += (dy * xhat).sum(axis=(0, 2))
        if self.shift is not None:
            self.shift.grad += dy.sum(axis=(0, 2))
        dxhat = dy * self.scale.value[:, None]
        m1 = dxhat.mean(axis=(0, 2))
        m2 = (dxhat * xhat).mean(axis=(0, 2))
        return inv[:, None] * (dxhat - m1[:, None] - xhat * m2[:, None])


class ChannelLayerNorm(Module):
    """Normalize across channels independently at each (batch, time) position."""

    def __init__(self, channels: int, dtype=np.float32, eps: float = NORM_EPS):
        super().__init__()
        self.eps = eps
        self.scale = self.param("scale", np.ones(channels, dtype=dtype))
        self.shift = self.param("shift", np.zeros(channels, dtype=dtype))

    def forward(self, x, training=False):
        mean = x.mean(axis=1, keepdims=True)
        var = x.var(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv
        if training:
            self._xhat, self._inv = xhat, inv
        return self.scale.value[:, None] * xhat + self.shift.value[:, None]

    def backward(self, dy):
        xhat, inv = self._xhat, self._inv
        self.scale.grad += (dy * xhat).sum(axis=(0, 2))
        self.shift.grad += dy.sum(axis=(0, 2))
        dxhat = dy * self.scale.value[:, None]
        m1 = dxhat.mean(axis=1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
        return inv * (dxhat - m1 - xhat * m2)


def make_norm(kind: str, channels: int, dtype=np.float32,
              shift: bool = True) -> Module:
    """Build a norm layer. ``shift=False`` drops the additive parameter;
    used where batch norm would make it structurally inert (its output only
    ever reaches the loss through further batch norms, which subtract any
    per-channel constant exactly). Layer norm keeps the shift always."""
    if kind == "batch_norm":
        return BatchNorm(channels, dtype, shift=shift)
    if kind == "layer_norm":
        return ChannelLayerNorm(channels, dtype)
    raise ValueError(f"unknown norm kind {kind!r}")


class MaxPool(Module):
    """1-D max pooling over time."""

    def __init__(self, kernel: int, stride: int, pad: int):
        super().__init__()
        self.kernel, self.stride, self.pad = kernel, stride, pad

    def out_length(self, t: int) -> int:
        return (t + 2 * self.pad - self.kernel) // self.stride + 1

    def forward(self, x, training=False):
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad)),
                    constant_values=-np.inf)
        win = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)
        win = win[:, :, ::self.stride, :]
        y = win.max(axis=-1)
        if training:
            self._argmax = win.argmax(axis=-1)
            self._in_t = x.shape[2]
        return y

    def backward(self, dy):
        b, c, to = dy.shape
        dxp = np.zeros((b, c, self._in_t + 2 * self.pad), dtype=dy.dtype)
        # source position of each pooled max, in padded coordinates
        src = np.arange(to)[None, None, :] * self.stride + self._argmax
        bb = np.arange(b)[:, None, None]
        cc = np.arange(c)[None, :, None]
        np.add.at(dxp, (bb, cc, src), dy)
        return dxp[:, :, self.pad:self.pad + self._in_t] if self.pad else dxp


class GlobalAvgPool(Module):
    """Mean over the time axis: (B,C,T) -> (B,C)."""

    def forward(self, x, training=False):
        if training:
            self._t = x.shape[2]
        return x.mean(axis=2)

    def backward(self, dy):
        return np.repeat(dy[:, :, None] / self._t, self._t, axis=2)
