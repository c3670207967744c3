"""Layer forward/backward checks against loop oracles and finite differences."""

import numpy as np
import pytest

from ionext.nn.layers import (
    BatchNorm,
    ChannelLayerNorm,
    DepthwiseConv,
    GlobalAvgPool,
    Linear,
    MaxPool,
    PointwiseConv,
    ShapeError,
    TemporalConv,
    trunc_normal,
)

from oracles import loop_batch_norm, loop_layer_norm


def fd_layer_check(layer, x, rng, extra_forward=None, h=1e-6, tol=1e-6):
    """Finite-difference the layer's input and parameter gradients."""
    y = layer.forward(x, training=True)
    dy = rng.standard_normal(y.shape)
    layer.zero_grads()
    dx = layer.backward(dy)

    def loss():
        return float((layer.forward(x, training=True) * dy).sum())

    flat = x.reshape(-1)
    for idx in rng.choice(flat.size, size=min(25, flat.size), replace=False):
        orig = flat[idx]
        flat[idx] = orig + h
        up = loss()
        flat[idx] = orig - h
        down = loss()
        flat[idx] = orig
        assert abs((up - down) / (2 * h) - dx.reshape(-1)[idx]) < tol
    for name, p in layer.named_parameters():
        pf = p.value.reshape(-1)
        for idx in rng.choice(pf.size, size=min(10, pf.size), replace=False):
            orig = pf[idx]
            pf[idx] = orig + h
            up = loss()
            pf[idx] = orig - h
            down = loss()
            pf[idx] = orig
            fd = (up - down) / (2 * h)
            assert abs(fd - p.grad.reshape(-1)[idx]) < tol, name


def test_trunc_normal_bounds(rng):
    vals = trunc_normal(rng, (20000,), std=0.02, dtype=np.float64)
    assert np.abs(vals).max() <= 0.04 + 1e-12
    # truncation at +-2 sigma shrinks the std to ~0.880 sigma
    assert abs(vals.std() - 0.88 * 0.02) < 0.001


def test_batch_norm_matches_loop_oracle(rng):
    bn = BatchNorm(5, dtype=np.float64)
    bn.scale.value[...] = 1 + 0.2 * rng.standard_normal(5)
    bn.shift.value[...] = rng.standard_normal(5)
    x = rng.standard_normal((3, 5, 7))
    got = bn.forward(x, training=True)
    want = loop_batch_norm(x, bn.scale.value, bn.shift.value)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


def test_layer_norm_matches_loop_oracle(rng):
    ln = ChannelLayerNorm(5, dtype=np.float64)
    ln.scale.value[...] = 1 + 0.2 * rng.standard_normal(5)
    ln.shift.value[...] = rng.standard_normal(5)
    x = rng.standard_normal((3, 5, 7))
    got = ln.forward(x, training=True)
    want = loop_layer_norm(x, ln.scale.value, ln.shift.value)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


def test_batch_norm_running_stats_inference(rng):
    bn = BatchNorm(4, dtype=np.float64)
    x = 2.0 + 3.0 * rng.standard_normal((8, 4, 50))
    for _ in range(200):
        bn.forward(x, training=True)
    y = bn.forward(x, training=False)
    # converged running stats normalize this exact batch
    assert abs(y.mean()) < 1e-2
    assert abs(y.std() - 1.0) < 1e-2
    # inference is deterministic and batch-independent
    y1 = bn.forward(x[:1], training=False)
    np.testing.assert_array_equal(y1, y[:1])


@pytest.mark.parametrize("layer_builder", [
    lambda rng: PointwiseConv(rng, 5, 7, np.float64),
    lambda rng: PointwiseConv(rng, 5, 7, np.float64, bias=False),
    lambda rng: Linear(rng, 6, 3, np.float64),
    lambda rng: TemporalConv(rng, 4, 6, 4, 4, 0, np.float64),
    lambda rng: TemporalConv(rng, 4, 6, 7, 2, 3, np.float64, bias=False),
    lambda rng: DepthwiseConv(rng, 5, 5, np.float64),
    lambda rng: BatchNorm(5, np.float64),
    lambda rng: BatchNorm(5, np.float64, shift=False),
    lambda rng: ChannelLayerNorm(5, np.float64),
])
def test_layer_gradients(layer_builder, rng):
    layer = layer_builder(rng)
    for _, p in layer.named_parameters():
        if p.value.ndim and not np.any(p.value):
            p.value[...] = 0.3 * rng.standard_normal(p.value.shape)
    if isinstance(layer, Linear):
        x = rng.standard_normal((3, 6))
    else:
        x = rng.standard_normal((2, layer_input_channels(layer), 16))
    fd_layer_check(layer, x, rng)


def layer_input_channels(layer):
    if isinstance(layer, PointwiseConv):
        return layer.w.value.shape[1]
    if isinstance(layer, TemporalConv):
        return layer.w.value.shape[1]
    if isinstance(layer, DepthwiseConv):
        return layer.w.value.shape[0]
    return layer.scale.value.shape[0]


def test_maxpool_forward_and_backward(rng):
    pool = MaxPool(3, 2, 1)
    x = rng.standard_normal((2, 3, 10))
    y = pool.forward(x, training=True)
    assert y.shape == (2, 3, 5)
    # forward value oracle
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1)), constant_values=-np.inf)
    for n in range(2):
        for c in range(3):
            for t in range(5):
                assert y[n, c, t] == xp[n, c, 2 * t:2 * t + 3].max()
    # backward routes gradient mass to max positions
    dy = rng.standard_normal(y.shape)
    dx = pool.backward(dy)
    assert dx.shape == x.shape
    np.testing.assert_allclose(dx.sum(), dy.sum(), rtol=1e-12)


def test_global_avg_pool_roundtrip(rng):
    gap = GlobalAvgPool()
    x = rng.standard_normal((2, 4, 10))
    y = gap.forward(x, training=True)
    np.testing.assert_allclose(y, x.mean(axis=2))
    dx = gap.backward(np.ones_like(y))
    np.testing.assert_allclose(dx, np.full_like(x, 1 / 10))


def test_temporal_conv_too_short_raises(rng):
    conv = TemporalConv(rng, 3, 4, 4, 4, 0, np.float64)
    with pytest.raises(ShapeError):
        conv.forward(rng.standard_normal((1, 3, 2)), training=False)


def test_depthwise_requires_odd_kernel(rng):
    with pytest.raises(ValueError):
        DepthwiseConv(rng, 4, 2, np.float64)
