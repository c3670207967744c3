"""Model configuration and the velocity-regression backbone."""

import dataclasses
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .blocks import Downsample, EncoderBlock, Head, Stem
from .layers import Module, ShapeError

STEM_KINDS = ("nonoverlap_k4s4", "conv7s2_maxpool")
NORM_KINDS = ("batch_norm", "layer_norm")
GATING_AXES = ("time", "channel")


class ConfigError(ValueError):
    """Invalid model configuration."""


@dataclass(frozen=True)
class ModelConfig:
    """Complete architectural description; every ablation variant is one of
    these. Wing kernel bases (k0, k1) imply branch kernels (1, k, 3k+2)."""

    stem_kind: str = "nonoverlap_k4s4"
    stage_depths: tuple = (2, 2, 6, 2)
    stage_widths: tuple = (96, 192, 384, 768)
    wing_kernel_bases: tuple = (3, 5)
    norm_kind: str = "batch_norm"
    stgu_enabled: bool = True
    stgu_gating_axis: str = "time"
    stgu_value_kernel: int = 3
    output_dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "stage_depths", tuple(int(d) for d in self.stage_depths))
        object.__setattr__(self, "stage_widths", tuple(int(w) for w in self.stage_widths))
        object.__setattr__(self, "wing_kernel_bases",
                           tuple(int(k) for k in self.wing_kernel_bases))
        self.validate()

    def validate(self):
        if self.stem_kind not in STEM_KINDS:
            raise ConfigError(f"stem_kind must be one of {STEM_KINDS}")
        if self.norm_kind not in NORM_KINDS:
            raise ConfigError(f"norm_kind must be one of {NORM_KINDS}")
        if self.stgu_gating_axis not in GATING_AXES:
            raise ConfigError(f"stgu_gating_axis must be one of {GATING_AXES}")
        if len(self.stage_depths) != 4 or any(d < 1 for d in self.stage_depths):
            raise ConfigError("stage_depths must be 4 positive integers")
        if len(self.stage_widths) != 4 or any(w < 2 for w in self.stage_widths):
            raise ConfigError("stage_widths must be 4 integers >= 2")
        if any(w % 2 for w in self.stage_widths):
            raise ConfigError("stage widths must be even (dual-wing split)")
        if len(self.wing_kernel_bases) != 2 or any(
                k < 1 or k % 2 == 0 for k in self.wing_kernel_bases):
            raise ConfigError("wing_kernel_bases must be two odd integers")
        if self.stgu_value_kernel < 1 or self.stgu_value_kernel % 2 == 0:
            raise ConfigError("stgu_value_kernel must be odd")
        if self.output_dim < 1:
            raise ConfigError("output_dim must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("stage_depths", "stage_widths", "wing_kernel_bases"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def tiny_config(**overrides) -> ModelConfig:
    """Smallest practical config; used by gradcheck and fast tests."""
    base = dict(stage_depths=(1, 1, 1, 1), stage_widths=(4, 8, 8, 8))
    base.update(overrides)
    return ModelConfig(**base)


def desk_config(**overrides) -> ModelConfig:
    """Reduced-width config that trains in minutes on a CPU."""
    base = dict(stage_widths=(32, 64, 128, 256))
    base.update(overrides)
    return ModelConfig(**base)


# ---------------------------------------------------------------------------
# flat key=value config files

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False,
               "yes": True, "no": False}


def _parse_value(field: dataclasses.Field, raw: str):
    if field.name in ("stage_depths", "stage_widths", "wing_kernel_bases"):
        return tuple(int(v.strip()) for v in raw.split(","))
    if field.type in ("bool", bool):
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"{field.name}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    if field.type in ("int", int):
        return int(raw)
    return raw.strip()


def load_model_config(path) -> ModelConfig:
    """Parse a flat ``key = value`` model-config file; unknown keys rejected."""
    fields = {f.name: f for f in dataclasses.fields(ModelConfig)}
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise ConfigError(f"{path} line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(fields[key], raw.strip())
    return ModelConfig(**values)


def save_model_config(config: ModelConfig, path):
    lines = []
    for key, value in config.to_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# backbone


class _Stage(Module):
    def __init__(self, rng, depth, channels, config, dtype):
        super().__init__()
        self.blocks = [
            self.child(f"block{i + 1}", EncoderBlock(
                rng, channels, config.wing_kernel_bases, config.norm_kind,
                config.stgu_enabled, config.stgu_gating_axis,
                config.stgu_value_kernel, dtype))
            for i in range(depth)
        ]

    def forward(self, x, training=False, capture=None):
        for i, block in enumerate(self.blocks):
            cap = {} if capture is not None else None
            x = block.forward(x, training, cap)
            if capture is not None:
                capture[f"block{i + 1}"] = cap
        return x

    def backward(self, dy):
        for block in reversed(self.blocks):
            dy = block.backward(dy)
        return dy


class IONextModel(Module):
    """Hierarchical conv backbone regressing per-window average velocity.

    Input (B, 6, T) with T >= 32; output (B, output_dim). Four stages of
    encoder blocks separated by stride-2 downsampling, then a pooled affine
    head. Inference mode uses stored normalization statistics and is
    deterministic and side-effect free.
    """

    def __init__(self, config: ModelConfig, init_seed: int = 0, dtype=np.float32):
        super().__init__()
        self.config = config
        self.dtype = dtype
        rng = np.random.default_rng(init_seed)
        widths = config.stage_widths
        self.stem = self.child(
            "stem", Stem(rng, config.stem_kind, widths[0], config.norm_kind, dtype))
        self.stages = []
        self.downs = []
        for i in range(4):
            self.stages.append(self.child(
                f"stage{i + 1}",
                _Stage(rng, config.stage_depths[i], widths[i], config, dtype)))
            if i < 3:
                self.downs.append(self.child(
                    f"down{i + 1}",
                    Downsample(rng, widths[i], widths[i + 1], config.norm_kind, dtype)))
        self.head = self.child(
            "head", Head(rng, widths[3], config.output_dim, config.norm_kind, dtype))

    # -- shape bookkeeping ---------------------------------------------------

    def stage_lengths(self, t: int) -> list:
        """Temporal length at the output of the stem and each downsample."""
        lengths = [self.stem.out_length(t)]
        for down in self.downs:
            lengths.append(down.out_length(lengths[-1]))
        return lengths

    # -- forward / backward ---------------------------------------------------

    def _as_batch(self, x):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 2:
            return x[None], True
        if x.ndim == 3:
            return x, False
        raise ShapeError(f"expected (6,T) or (B,6,T), got shape {x.shape}")

    def forward(self, x, training=False, capture=None):
        x, squeeze = self._as_batch(x)
        if x.shape[1] != 6:
            raise ShapeError(f"expected 6 input channels, got {x.shape[1]}")
        h = self.stem.forward(x, training)
        for i in range(4):
            cap = {} if capture is not None else None
            h = self.stages[i].forward(h, training, cap)
            if capture is not None:
                capture[f"stage{i + 1}"] = h
                capture[f"stage{i + 1}_blocks"] = cap
            if i < 3:
                h = self.downs[i].forward(h, training)
        out = self.head.forward(h, training)
        return out[0] if squeeze else out

    def backward(self, dout):
        """Accumulate parameter gradients; returns the input gradient."""
        dout = np.asarray(dout, dtype=self.dtype)
        if dout.ndim == 1:
            dout = dout[None]
        dh = self.head.backward(dout)
        for i in reversed(range(4)):
            if i < 3:
                dh = self.downs[i].backward(dh)
            dh = self.stages[i].backward(dh)
        return self.stem.backward(dh)

    # -- parameter access ------------------------------------------------------

    def parameter_set(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, p.value) for name, p in self.named_parameters())

    def buffer_set(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, b) for name, b in self.named_buffers())

    def load_state(self, params: dict, buffers: dict | None = None):
        """Copy tensors (by name) into this model, validating shapes."""
        own = dict(self.named_parameters())
        if set(own) != set(params):
            missing = sorted(set(own) - set(params))
            extra = sorted(set(params) - set(own))
            raise ConfigError(f"parameter names mismatch: missing {missing}, "
                              f"unexpected {extra}")
        for name, p in own.items():
            arr = np.asarray(params[name], dtype=p.value.dtype)
            if arr.shape != p.value.shape:
                raise ConfigError(f"{name}: shape {arr.shape} != {p.value.shape}")
            p.value[...] = arr
        if buffers is not None:
            own_b = dict(self.named_buffers())
            for name, b in own_b.items():
                if name in buffers:
                    b[...] = np.asarray(buffers[name], dtype=b.dtype)


def build_model(config: ModelConfig, init_seed: int = 0,
                dtype=np.float32) -> IONextModel:
    """Construct a model with truncated-normal(0.02) conv/linear weights,
    zero biases, unit norm scales; deterministic for a fixed seed."""
    config.validate()
    return IONextModel(config, init_seed, dtype)
