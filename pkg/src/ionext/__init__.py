"""Inertial odometry from raw IMU windows.

A hierarchical 1-D convolutional backbone regresses per-window average
velocity from 6-axis IMU signals; trajectories are reconstructed by
integrating the predictions. The package also ships the training protocol,
trajectory error metrics with length normalization, a synthetic planar
data generator with exact ground truth, and a CLI tying it together.
"""

__version__ = "0.1.0"

from .data import (
    GroundTruthTrack,
    ImuSequence,
    ImuWindow,
    SyntheticSpec,
    generate_dataset,
    load_sequence,
    make_windows,
    stack_windows,
    synthesize,
    write_sequence,
)
from .kernels import backend_name
from .metrics import (
    MetricReport,
    TrajectoryEstimate,
    ale,
    ate,
    evaluate,
    normalize,
    path_length,
    reconstruct,
    rte,
)
from .nn.accounting import count_parameters, count_parameters_runtime, estimate_flops
from .nn.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .nn.model import ModelConfig, build_model, desk_config, tiny_config
from .training import TrainConfig, gradcheck, mse_loss, train

__all__ = [
    "Checkpoint",
    "GroundTruthTrack",
    "ImuSequence",
    "ImuWindow",
    "MetricReport",
    "ModelConfig",
    "SyntheticSpec",
    "TrainConfig",
    "TrajectoryEstimate",
    "__version__",
    "ale",
    "ate",
    "backend_name",
    "build_model",
    "count_parameters",
    "count_parameters_runtime",
    "desk_config",
    "estimate_flops",
    "evaluate",
    "generate_dataset",
    "gradcheck",
    "load_checkpoint",
    "load_sequence",
    "make_windows",
    "mse_loss",
    "normalize",
    "path_length",
    "reconstruct",
    "rte",
    "save_checkpoint",
    "stack_windows",
    "synthesize",
    "tiny_config",
    "train",
    "write_sequence",
]
