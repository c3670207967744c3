"""Mixer and gating unit vs. loop oracles, plus the block invariants."""

import numpy as np
import pytest

from ionext.nn.blocks import DualWingMixer, EncoderBlock, TemporalGatingUnit

from conftest import randomize_params
from oracles import loop_dadm, loop_stgu


def build_mixer(rng, channels, norm_kind="batch_norm"):
    mixer = DualWingMixer(rng, channels, (3, 5), norm_kind, dtype=np.float64)
    randomize_params(mixer, rng)
    return mixer


def build_gate(rng, channels, axis="time"):
    gate = TemporalGatingUnit(rng, channels, axis, 3, dtype=np.float64)
    randomize_params(gate, rng)
    return gate


@pytest.mark.parametrize("seed", range(20))
def test_mixer_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    channels = int(rng.choice([4, 6, 8]))
    t = int(rng.integers(8, 33))
    b = int(rng.integers(1, 4))
    mixer = build_mixer(rng, channels)
    x = rng.standard_normal((b, channels, t))
    got = mixer.forward(x, training=True)
    want = loop_dadm(x, dict((n, p.value) for n, p in mixer.named_parameters()))
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("axis", ["time", "channel"])
def test_gate_matches_loop_oracle(seed, axis):
    rng = np.random.default_rng(100 + seed)
    channels = int(rng.choice([4, 6, 8]))
    t = int(rng.integers(8, 33))
    b = int(rng.integers(1, 4))
    gate = build_gate(rng, channels, axis)
    x = rng.standard_normal((b, channels, t))
    got = gate.forward(x, training=True)
    want = loop_stgu(x, dict((n, p.value) for n, p in gate.named_parameters()),
                     gating_axis=axis)
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)


def test_fusion_weights_sum_to_one(rng):
    mixer = build_mixer(rng, 8)
    cap = {}
    mixer.forward(rng.standard_normal((3, 8, 16)), training=False, capture=cap)
    for wing in ("wing0", "wing1"):
        omega = cap[wing]["omega"]
        assert omega.min() >= 0.0
        np.testing.assert_allclose(omega.sum(axis=1), 1.0, atol=1e-6)


@pytest.mark.parametrize("axis", ["time", "channel"])
def test_gate_values_strictly_inside_unit_interval(axis, rng):
    gate = build_gate(rng, 6, axis)
    cap = {}
    gate.forward(rng.standard_normal((2, 6, 12)), training=False, capture=cap)
    g = cap["gate"]
    assert np.all(g > 0.0) and np.all(g < 1.0)


def test_gate_zero_input_zero_bias_gives_zero_output(rng):
    gate = build_gate(rng, 6, "time")
    gate.w3.b.value[...] = 0.0
    gate.value.b.value[...] = 0.0
    cap = {}
    out = gate.forward(np.zeros((2, 6, 10)), training=False, capture=cap)
    np.testing.assert_allclose(cap["gate"], 0.5)
    np.testing.assert_allclose(out, 0.0)


def build_block(rng, channels=8, stgu=True, axis="time", norm="batch_norm"):
    block = EncoderBlock(rng, channels, (3, 5), norm, stgu, axis, 3,
                         dtype=np.float64)
    randomize_params(block, rng)
    return block


def test_block_preserves_shape(rng):
    for b, c, t in ((1, 4, 33), (3, 8, 16), (2, 6, 50)):
        block = build_block(rng, c)
        x = rng.standard_normal((b, c, t))
        assert block.forward(x, training=False).shape == (b, c, t)


def test_block_residual_identity_with_zeroed_projections(rng):
    """Zero mixer output projection and gate value branch => identity."""
    block = build_block(rng, 8)
    block.dadm.w2.w.value[...] = 0.0
    if block.dadm.w2.b is not None:
        block.dadm.w2.b.value[...] = 0.0
    block.stgu.value.w.value[...] = 0.0
    block.stgu.value.b.value[...] = 0.0
    x = rng.standard_normal((2, 8, 20))
    np.testing.assert_allclose(block.forward(x, training=True), x, atol=1e-7)
    np.testing.assert_allclose(block.forward(x, training=False), x, atol=1e-7)


def test_block_without_gate_equals_mixer_substep(rng):
    block = build_block(rng, 8, stgu=False)
    x = rng.standard_normal((2, 8, 20))
    h = x + block.dadm.forward(block.norm1.forward(x, training=True), training=True)
    np.testing.assert_array_equal(block.forward(x, training=True), h)


def test_constant_input_fusion_independent_of_weights(rng):
    """With equal-sum branch kernels and zero biases, a constant-in-time
    input makes all three branches agree away from the padding edges, so
    the fused interior is independent of the fusion weights."""
    mixer = build_mixer(rng, 8)
    half = 4
    for wing in (mixer.wing0, mixer.wing1):
        base = rng.standard_normal(half)
        for br in wing.branches:
            k = br.kernel
            br.w.value[...] = np.repeat(base[:, None], k, axis=1) / k
            br.b.value[...] = 0.0
    x = np.repeat(rng.standard_normal((3, 8))[:, :, None], 40, axis=2)
    margin = (3 * 5 + 2) // 2  # widest kernel's padding reach
    cap1 = {}
    mixer.forward(x, training=True, capture=cap1)
    # different fusion weights, same interior
    for wing in (mixer.wing0, mixer.wing1):
        wing.w1.w.value[...] = rng.standard_normal(wing.w1.w.value.shape)
        wing.w1.b.value[...] = rng.standard_normal(wing.w1.b.value.shape)
    cap2 = {}
    mixer.forward(x, training=True, capture=cap2)
    for wing in ("wing0", "wing1"):
        f1 = cap1[wing]["fused"][:, :, margin:-margin]
        f2 = cap2[wing]["fused"][:, :, margin:-margin]
        assert not np.allclose(cap1[wing]["omega"], cap2[wing]["omega"])
        np.testing.assert_allclose(f1, f2, rtol=1e-9, atol=1e-9)
        # and the fused interior is constant over time
        np.testing.assert_allclose(f1, np.broadcast_to(f1[:, :, :1], f1.shape),
                                   rtol=1e-9, atol=1e-9)


def test_wing_channel_permutation_equivariance(rng):
    """Permuting one wing's input channels together with its per-channel
    parameters permutes that wing's fused output the same way."""
    channels, half = 8, 4
    mixer = build_mixer(rng, channels)
    x = rng.standard_normal((2, channels, 16))
    cap = {}
    mixer.forward(x, training=True, capture=cap)
    f0 = cap["wing0"]["fused"]

    perm = np.random.default_rng(7).permutation(half)
    wing = mixer.wing0
    wing.norm.scale.value[...] = wing.norm.scale.value[perm]
    if wing.norm.shift is not None:
        wing.norm.shift.value[...] = wing.norm.shift.value[perm]
    for br in wing.branches:
        br.w.value[...] = br.w.value[perm]
        br.b.value[...] = br.b.value[perm]
    # rows of the fusion projection are (scale, channel) pairs; remap the
    # channel coordinate of both rows and columns
    w1 = wing.w1.w.value.reshape(3, half, half)
    wing.w1.w.value[...] = w1[:, perm][:, :, perm].reshape(3 * half, half)
    wing.w1.b.value[...] = wing.w1.b.value.reshape(3, half)[:, perm].reshape(-1)

    xp = x.copy()
    xp[:, :half] = x[:, :half][:, perm]
    cap_p = {}
    mixer.forward(xp, training=True, capture=cap_p)
    np.testing.assert_allclose(cap_p["wing0"]["fused"], f0[:, perm],
                               rtol=1e-10, atol=1e-10)
