"""Domain types for IMU recordings, ground truth and training windows."""

from dataclasses import dataclass

import numpy as np

TIMESTAMP_TOL = 1e-9


class DataError(ValueError):
    """Invalid sequence, track or window data."""


@dataclass(frozen=True)
class ImuSequence:
    """Uniformly sampled 6-axis IMU recording.

    gyro is rad/s, accel is m/s^2, both (N, 3); timestamps are seconds on a
    strict 1/sample_rate grid starting at 0.
    """

    sequence_id: str
    sample_rate: float
    timestamps: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        n = len(self.timestamps)
        if self.gyro.shape != (n, 3) or self.accel.shape != (n, 3):
            raise DataError(
                f"gyro/accel shapes {self.gyro.shape}/{self.accel.shape} do not "
                f"match {n} timestamps")
        if n >= 2:
            dt = np.diff(self.timestamps)
            if np.any(dt <= 0):
                row = int(np.argmax(dt <= 0)) + 1
                raise DataError(f"timestamps not strictly increasing at sample {row}")
            err = np.abs(dt - 1.0 / self.sample_rate)
            if err.max() > TIMESTAMP_TOL:
                row = int(err.argmax()) + 1
                raise DataError(
                    f"timestamp spacing at sample {row} deviates from "
                    f"1/{self.sample_rate} Hz by {err.max():.3e} s")
        for name, arr in (("timestamps", self.timestamps), ("gyro", self.gyro),
                          ("accel", self.accel)):
            if not np.isfinite(arr).all():
                row = int(np.argwhere(~np.isfinite(arr))[0][0])
                raise DataError(f"non-finite {name} value at sample {row}")

    @property
    def n_samples(self) -> int:
        return len(self.timestamps)

    @property
    def duration(self) -> float:
        """Nominal duration n/rate (one sample period past the last stamp)."""
        return self.n_samples / self.sample_rate

    def channel_matrix(self) -> np.ndarray:
        """(6, N) view-friendly channel layout: gx,gy,gz,ax,ay,az."""
        return np.vstack([self.gyro.T, self.accel.T])


@dataclass(frozen=True)
class GroundTruthTrack:
    """Planar ground-truth positions (meters) on the sequence's time grid;
    velocities (m/s) optional."""

    timestamps: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.timestamps)
        if self.positions.shape != (n, 2):
            raise DataError(f"positions shape {self.positions.shape} does not "
                            f"match {n} timestamps")
        if not np.isfinite(self.positions).all():
            row = int(np.argwhere(~np.isfinite(self.positions))[0][0])
            raise DataError(f"non-finite position at sample {row}")
        if self.velocities is not None and self.velocities.shape != (n, 2):
            raise DataError(f"velocities shape {self.velocities.shape} does not "
                            f"match {n} timestamps")
        if n >= 2 and np.any(np.diff(self.timestamps) <= 0):
            row = int(np.argmax(np.diff(self.timestamps) <= 0)) + 1
            raise DataError(f"timestamps not strictly increasing at sample {row}")


MIN_WINDOW_SAMPLES = 32


@dataclass(frozen=True)
class ImuWindow:
    """One training example: a (6, T) signal slice and its average-velocity
    label over the window. T must cover at least the model's minimum input
    length."""

    signal: np.ndarray
    label_velocity: np.ndarray
    window_start: float

    def __post_init__(self):
        if self.signal.ndim != 2 or self.signal.shape[0] != 6:
            raise DataError(f"signal must be (6, T), got {self.signal.shape}")
        if self.signal.shape[1] < MIN_WINDOW_SAMPLES:
            raise DataError(f"window of {self.signal.shape[1]} samples is below "
                            f"the minimum of {MIN_WINDOW_SAMPLES}")
        if self.label_velocity.shape != (2,):
            raise DataError("label_velocity must be a 2-vector")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planar synthetic motion generator."""

    duration: float = 60.0
    sample_rate: float = 200.0
    speed_range: tuple = (0.6, 1.8)
    heading_smoothness: float = 8.0     # OU time constant, seconds; 0 = constant
    noise_std_gyro: float = 0.002
    noise_std_accel: float = 0.02
    bias_std_gyro: float = 0.0005
    bias_std_accel: float = 0.005
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "speed_range",
                           (float(self.speed_range[0]), float(self.speed_range[1])))
        if self.duration <= 0 or self.sample_rate <= 0:
            raise DataError("duration and sample_rate must be positive")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise DataError(f"bad speed_range {self.speed_range}")
        if self.heading_smoothness < 0:
            raise DataError("heading_smoothness must be >= 0")
        for name in ("noise_std_gyro", "noise_std_accel",
                     "bias_std_gyro", "bias_std_accel"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
