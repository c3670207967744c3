"""Closed-form parameter and FLOP accounting, derived from the config alone.

These sums never touch a built model, so they double as an independent
check of the runtime tally (`sum(p.size for p in model parameters)`).
Published figures for the full-width architecture are reported alongside
by the `inspect` command for comparison.
"""

from .model import ModelConfig

# Published reference figures for the default full-width architecture.
# This implementation counts only the operations it actually performs, so
# its own parameter count differs; both are printed by `inspect`.
REFERENCE_PARAMS = 1.1e7
REFERENCE_FLOPS = 7.3e7

FLOP_CONVENTION = ("FLOPs = 2 x multiply-accumulates of conv and affine "
                   "layers at batch size 1; padded positions included; "
                   "normalization, pooling and activations excluded")


def _conv_out(t: int, kernel: int, stride: int, pad: int) -> int:
    return (t + 2 * pad - kernel) // stride + 1


def _block_params(c: int, config: ModelConfig) -> int:
    half = c // 2
    bias = 0 if config.norm_kind == "batch_norm" else 1  # see blocks.py
    total = 2 * c                                # norm before the mixer
    for kb in config.wing_kernel_bases:
        total += 2 * half                        # wing norm
        for k in (1, kb, 3 * kb + 2):            # three depthwise branches
            total += half * k + half
        total += (3 * half) * half + 3 * half    # fusion-weight projection
    total += c * c + bias * c                    # output pointwise mix
    if config.stgu_enabled:
        total += 2 * c                           # norm before the gate
        if config.stgu_gating_axis == "time":
            total += 1 * 2 + 1                   # 2->1 pointwise gate
        else:
            total += c * 2 * c + c               # 2C->C projection
        total += c * config.stgu_value_kernel + c  # value branch
    return total


def count_parameters(config: ModelConfig) -> int:
    """Analytic trainable-parameter count (norm running stats excluded).

    Under batch norm, stem/downsample conv biases, stem/downsample norm
    shifts and the mixer output bias are not allocated (structurally inert),
    so those terms are norm-kind dependent.
    """
    w = config.stage_widths
    bias = 0 if config.norm_kind == "batch_norm" else 1
    if config.stem_kind == "nonoverlap_k4s4":
        total = w[0] * 6 * 4 + bias * w[0]
    else:
        total = w[0] * 6 * 7 + bias * w[0]
    total += w[0] + bias * w[0]                  # stem norm scale (+shift)
    for i in range(4):
        total += config.stage_depths[i] * _block_params(w[i], config)
        if i < 3:
            total += w[i] + bias * w[i]          # downsample norm
            total += w[i + 1] * w[i] * 2 + bias * w[i + 1]
    total += 2 * w[3]                            # head norm (shift is live)
    total += config.output_dim * w[3] + config.output_dim
    return total


def count_parameters_runtime(model) -> int:
    """Tally over the actually allocated parameter tensors."""
    return sum(p.value.size for _, p in model.named_parameters())


def _block_macs(c: int, t: int, config: ModelConfig) -> int:
    half = c // 2
    macs = 0
    for kb in config.wing_kernel_bases:
        for k in (1, kb, 3 * kb + 2):
            macs += half * k * t                 # depthwise branches
        macs += (3 * half) * half                # fusion weights (pooled)
    macs += c * c * t                            # output pointwise mix
    if config.stgu_enabled:
        if config.stgu_gating_axis == "time":
            macs += 2 * t
        else:
            macs += c * 2 * c
        macs += c * config.stgu_value_kernel * t
    return macs


def estimate_flops(config: ModelConfig, t: int) -> int:
    """FLOP estimate at input length ``t`` under FLOP_CONVENTION."""
    w = config.stage_widths
    if config.stem_kind == "nonoverlap_k4s4":
        t1 = _conv_out(t, 4, 4, 0)
        macs = w[0] * 6 * 4 * t1
    else:
        tc = _conv_out(t, 7, 2, 3)
        macs = w[0] * 6 * 7 * tc
        t1 = _conv_out(tc, 3, 2, 1)
    lengths = [t1]
    for _ in range(3):
        lengths.append(_conv_out(lengths[-1], 2, 2, 0))
    for i in range(4):
        macs += config.stage_depths[i] * _block_macs(w[i], lengths[i], config)
        if i < 3:
            macs += w[i + 1] * w[i] * 2 * lengths[i + 1]
    macs += config.output_dim * w[3]
    return 2 * macs
