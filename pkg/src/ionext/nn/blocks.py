"""Backbone building blocks: dual-wing mixer, temporal gating unit, encoder
block, stem, downsampling and the regression head.
"""

import numpy as np

from .layers import (
    DepthwiseConv,
    GlobalAvgPool,
    Linear,
    MaxPool,
    Module,
    PointwiseConv,
    ShapeError,
    TemporalConv,
    make_norm,
)

MIN_STEM_LENGTH = 32


def _softmax(z: np.ndarray, axis: int) -> np.ndarray:
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MixerWing(Module):
    """One wing of the dual-wing mixer.

    Normalizes its half of the channels, runs three parallel depthwise
    convolutions at kernel sizes (1, k, 3k+2), and blends them per channel
    with softmax weights predicted from the wing input's time-average.
    """

    def __init__(self, rng, half: int, kernel_base: int, norm_kind: str,
                 dtype=np.float32):
        super().__init__()
        self.half = half
        self.kernel_sizes = (1, kernel_base, 3 * kernel_base + 2)
        self.norm = self.child("norm", make_norm(norm_kind, half, dtype))
        self.branches = [
            self.child(f"branch{i}", DepthwiseConv(rng, half, k, dtype))
            for i, k in enumerate(self.kernel_sizes)
        ]
        self.w1 = self.child("w1", Linear(rng, half, 3 * half, dtype))

    def forward(self, x, training=False, capture=None):
        b, c, t = x.shape
        normed = self.norm.forward(x, training)
        ys = [br.forward(normed, training) for br in self.branches]
        stats = x.mean(axis=2)                                   # (B, half)
        z = self.w1.forward(stats, training).reshape(b, 3, c)
        omega = _softmax(z, axis=1)                              # (B, 3, half)
        fused = sum(omega[:, i, :, None] * ys[i] for i in range(3))
        if training:
            self._ys, self._omega, self._t = ys, omega, t
        if capture is not None:
            capture["omega"] = omega
            capture["branches"] = ys
            capture["fused"] = fused
        return fused

    def backward(self, dfused):
        ys, omega = self._ys, self._omega
        b, c, _ = dfused.shape
        domega = np.stack([(ys[i] * dfused).sum(axis=2) for i in range(3)], axis=1)
        dz = omega * (domega - (domega * omega).sum(axis=1, keepdims=True))
        dstats = self.w1.backward(dz.reshape(b, 3 * c))
        dx = np.repeat(dstats[:, :, None] / self._t, self._t, axis=2)
        dnormed = omega[:, 0, :, None] * dfused
        dnormed = self.branches[0].backward(dnormed)
        for i in (1, 2):
            dnormed += self.branches[i].backward(omega[:, i, :, None] * dfused)
        dx += self.norm.backward(dnormed)
        return dx


class DualWingMixer(Module):
    """Multi-scale token mixer over two channel halves with adaptive fusion.

    The input splits into two contiguous channel halves; each wing extracts
    three scales of depthwise features and fuses them with input-conditioned
    per-channel weights. A pointwise convolution remixes the concatenation.
    Time length is preserved.
    """

    def __init__(self, rng, channels: int, kernel_bases=(3, 5),
                 norm_kind: str = "batch_norm", dtype=np.float32):
        super().__init__()
        if channels % 2:
            raise ShapeError(f"channel count must be even, got {channels}")
        self.half = channels // 2
        self.wing0 = self.child(
            "wing0", MixerWing(rng, self.half, kernel_bases[0], norm_kind, dtype))
        self.wing1 = self.child(
            "wing1", MixerWing(rng, self.half, kernel_bases[1], norm_kind, dtype))
        # under batch norm the residual stream is re-normalized before every
        # use, so an output bias would be inert; allocate it only for LN
        self.w2 = self.child("w2", PointwiseConv(rng, channels, channels, dtype,
                                                 bias=norm_kind != "batch_norm"))

    def forward(self, x, training=False, capture=None):
        cap0 = {} if capture is not None else None
        cap1 = {} if capture is not None else None
        f0 = self.wing0.forward(x[:, :self.half], training, cap0)
        f1 = self.wing1.forward(x[:, self.half:], training, cap1)
        out = self.w2.forward(np.concatenate([f0, f1], axis=1), training)
        if capture is not None:
            capture["wing0"] = cap0
            capture["wing1"] = cap1
        return out

    def backward(self, dy):
        dcat = self.w2.backward(dy)
        d0 = self.wing0.backward(dcat[:, :self.half])
        d1 = self.wing1.backward(dcat[:, self.half:])
        return np.concatenate([d0, d1], axis=1)


class TemporalGatingUnit(Module):
    """Sigmoid gate from pooled statistics, applied to a depthwise value branch.

    gating_axis='time': per-time-step gate from channel-wise mean/max stats.
    gating_axis='channel': per-channel gate from temporal mean/max pooling.
    """

    def __init__(self, rng, channels: int, gating_axis: str = "time",
                 value_kernel: int = 3, dtype=np.float32):
        super().__init__()
        if gating_axis not in ("time", "channel"):
            raise ValueError(f"unknown gating axis {gating_axis!r}")
        self.axis = gating_axis
        self.channels = channels
        if gating_axis == "time":
            self.w3 = self.child("w3", PointwiseConv(rng, 2, 1, dtype))
        else:
            self.w3 = self.child("w3", Linear(rng, 2 * channels, channels, dtype))
        self.value = self.child("value", DepthwiseConv(rng, channels, value_kernel, dtype))

    def forward(self, x, training=False, capture=None):
        if self.axis == "time":
            mean = x.mean(axis=1, keepdims=True)                 # (B,1,T)
            idx = x.argmax(axis=1)                               # (B,T)
            mx = np.take_along_axis(x, idx[:, None, :], axis=1)  # (B,1,T)
            stats = np.concatenate([mean, mx], axis=1)           # (B,2,T)
            gate = _sigmoid(self.w3.forward(stats, training))    # (B,1,T)
        else:
            mean = x.mean(axis=2)                                # (B,C)
            idx = x.argmax(axis=2)                               # (B,C)
            mx = np.take_along_axis(x, idx[:, :, None], axis=2)[:, :, 0]
            stats = np.concatenate([mean, mx], axis=1)           # (B,2C)
            gate = _sigmoid(self.w3.forward(stats, training))[:, :, None]
        val = self.value.forward(x, training)
        if training:
            self._gate, self._val, self._idx, self._shape = gate, val, idx, x.shape
        if capture is not None:
            capture["gate"] = gate
        return gate * val

    def backward(self, dz):
        gate, val, idx = self._gate, self._val, self._idx
        b, c, t = self._shape
        dx = self.value.backward(dz * gate)
        if self.axis == "time":
            dgate = (dz * val).sum(axis=1, keepdims=True)        # (B,1,T)
            dpre = dgate * gate * (1.0 - gate)
            dstats = self.w3.backward(dpre)                      # (B,2,T)
            dx += dstats[:, :1] / c
            dmax = dstats[:, 1]                                  # (B,T)
            bb = np.arange(b)[:, None]
            tt = np.arange(t)[None, :]
            dx[bb, idx, tt] += dmax
        else:
            dgate = (dz * val).sum(axis=2)                       # (B,C)
            g2 = gate[:, :, 0]
            dpre = dgate * g2 * (1.0 - g2)
            dstats = self.w3.backward(dpre)                      # (B,2C)
            dx += dstats[:, :c, None] / t
            dmax = dstats[:, c:]                                 # (B,C)
            bb = np.arange(b)[:, None]
            cc = np.arange(c)[None, :]
            dx[bb, cc, idx] += dmax
        return dx


class EncoderBlock(Module):
    """Residual block: normalized mixer step, then (optionally) a normalized
    gating step. Maps (B,C,T) -> (B,C,T)."""

    def __init__(self, rng, channels: int, kernel_bases, norm_kind: str,
                 stgu_enabled: bool, gating_axis: str, value_kernel: int,
                 dtype=np.float32):
        super().__init__()
        self.stgu_enabled = stgu_enabled
        self.norm1 = self.child("norm1", make_norm(norm_kind, channels, dtype))
        self.dadm = self.child(
            "dadm", DualWingMixer(rng, channels, kernel_bases, norm_kind, dtype))
        if stgu_enabled:
            self.norm2 = self.child("norm2", make_norm(norm_kind, channels, dtype))
            self.stgu = self.child(
                "stgu", TemporalGatingUnit(rng, channels, gating_axis,
                                           value_kernel, dtype))

    def forward(self, x, training=False, capture=None):
        cap_d = {} if capture is not None else None
        h = x + self.dadm.forward(self.norm1.forward(x, training), training, cap_d)
        if capture is not None:
            capture["dadm"] = cap_d
        if not self.stgu_enabled:
            return h
        cap_s = {} if capture is not None else None
        out = h + self.stgu.forward(self.norm2.forward(h, training), training, cap_s)
        if capture is not None:
            capture["stgu"] = cap_s
        return out

    def backward(self, dy):
        if self.stgu_enabled:
            dh = dy + self.norm2.backward(self.stgu.backward(dy))
        else:
            dh = dy
        return dh + self.norm1.backward(self.dadm.backward(dh))


class Stem(Module):
    """Tokenizer mapping the raw 6-channel window to the first stage width."""

    def __init__(self, rng, kind: str, width: int, norm_kind: str, dtype=np.float32):
        super().__init__()
        self.kind = kind
        # conv bias and norm shift are inert under BN (constants are removed
        # by this and every downstream batch norm); see make_norm
        plain = norm_kind != "batch_norm"
        if kind == "nonoverlap_k4s4":
            self.conv = self.child("conv", TemporalConv(rng, 6, width, 4, 4, 0,
                                                        dtype, bias=plain))
            self.norm = self.child("norm", make_norm(norm_kind, width, dtype,
                                                     shift=plain))
            self.pool = None
        elif kind == "conv7s2_maxpool":
            self.conv = self.child("conv", TemporalConv(rng, 6, width, 7, 2, 3,
                                                        dtype, bias=plain))
            self.norm = self.child("norm", make_norm(norm_kind, width, dtype,
                                                     shift=plain))
            self.pool = self.child("pool", MaxPool(3, 2, 1))
        else:
            raise ValueError(f"unknown stem kind {kind!r}")

    def out_length(self, t: int) -> int:
        t = self.conv.out_length(t)
        return self.pool.out_length(t) if self.pool is not None else t

    def forward(self, x, training=False):
        if x.shape[2] < MIN_STEM_LENGTH:
            raise ShapeError(f"input length {x.shape[2]} < minimum "
                             f"{MIN_STEM_LENGTH}")
        h = self.norm.forward(self.conv.forward(x, training), training)
        if self.pool is not None:
            h = self.pool.forward(h, training)
        return h

    def backward(self, dy):
        if self.pool is not None:
            dy = self.pool.backward(dy)
        return self.conv.backward(self.norm.backward(dy))


class Downsample(Module):
    """Norm then non-overlapping stride-2 convolution to the next width."""

    def __init__(self, rng, c_in: int, c_out: int, norm_kind: str, dtype=np.float32):
        super().__init__()
        plain = norm_kind != "batch_norm"
        self.norm = self.child("norm", make_norm(norm_kind, c_in, dtype,
                                                 shift=plain))
        self.conv = self.child("conv", TemporalConv(rng, c_in, c_out, 2, 2, 0,
                                                    dtype, bias=plain))

    def out_length(self, t: int) -> int:
        return self.conv.out_length(t)

    def forward(self, x, training=False):
        if x.shape[2] < 2:
            raise ShapeError(f"time axis {x.shape[2]} < 2, cannot downsample")
        return self.conv.forward(self.norm.forward(x, training), training)

    def backward(self, dy):
        return self.norm.backward(self.conv.backward(dy))


class Head(Module):
    """Final norm, temporal average pooling and affine velocity output."""

    def __init__(self, rng, width: int, out_dim: int, norm_kind: str,
                 dtype=np.float32):
        super().__init__()
        self.norm = self.child("norm", make_norm(norm_kind, width, dtype))
        self.pool = self.child("pool", GlobalAvgPool())
        self.linear = self.child("linear", Linear(rng, width, out_dim, dtype))

    def forward(self, x, training=False):
        h = self.pool.forward(self.norm.forward(x, training), training)
        return self.linear.forward(h, training)

    def backward(self, dy):
        return self.norm.backward(self.pool.backward(self.linear.backward(dy)))
