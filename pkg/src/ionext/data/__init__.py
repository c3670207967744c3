"""IMU data handling: on-disk formats, windowing, synthetic generation."""

from .dataset import (
    DEFAULT_WINDOW_SECONDS,
    ManifestRow,
    generate_dataset,
    load_split,
    read_manifest,
)
from .io import FormatError, load_sequence, write_sequence
from .synthetic import GRAVITY, ideal_signals, synthesize
from .types import (
    DataError,
    GroundTruthTrack,
    ImuSequence,
    ImuWindow,
    SyntheticSpec,
)
from .windows import make_windows, stack_windows

__all__ = [
    "DEFAULT_WINDOW_SECONDS",
    "DataError",
    "FormatError",
    "GRAVITY",
    "GroundTruthTrack",
    "ImuSequence",
    "ImuWindow",
    "ManifestRow",
    "SyntheticSpec",
    "generate_dataset",
    "ideal_signals",
    "load_sequence",
    "load_split",
    "make_windows",
    "read_manifest",
    "stack_windows",
    "synthesize",
    "write_sequence",
]
