"""Model core: layers, blocks, backbone, accounting, checkpoints."""

from .accounting import count_parameters, count_parameters_runtime, estimate_flops
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .model import ModelConfig, build_model, desk_config, tiny_config

__all__ = [
    "Checkpoint",
    "ModelConfig",
    "build_model",
    "count_parameters",
    "count_parameters_runtime",
    "desk_config",
    "estimate_flops",
    "load_checkpoint",
    "save_checkpoint",
    "tiny_config",
]
