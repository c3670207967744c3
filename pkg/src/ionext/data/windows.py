"""Slicing sequences into labeled average-velocity windows."""

import numpy as np

from .types import DataError, GroundTruthTrack, ImuSequence, ImuWindow


def make_windows(seq: ImuSequence, gt: GroundTruthTrack, window_seconds: float,
                 stride_seconds: float) -> list[ImuWindow]:
    """Slice ``seq`` into (6, T) windows labeled with the exact average
    ground-truth velocity over each window.

    Window starts are n*stride for n = 0 .. floor((duration-window)/stride)
    with duration = n_samples/rate. The label is
    (p(start+window) - p(start)) / window. When the last window is flush
    with the end of the sequence, its endpoint falls one sample past the
    grid; that label averages over the available span ((T-1)/rate) instead.
    """
    if window_seconds <= 0 or stride_seconds <= 0:
        raise DataError("window_seconds and stride_seconds must be positive")
    rate = seq.sample_rate
    n = seq.n_samples
    t_win = int(round(rate * window_seconds))
    if t_win < 1 or n < t_win:
        raise DataError(
            f"sequence of {n} samples is shorter than one window ({t_win} samples)")
    if len(gt.timestamps) != n or np.abs(gt.timestamps - seq.timestamps).max() > 1e-9:
        raise DataError("ground truth must share the sequence's timestamp grid")

    channels = seq.channel_matrix()
    duration = seq.duration
    n_windows = int(np.floor((duration - window_seconds) / stride_seconds + 1e-9)) + 1
    windows = []
    for k in range(n_windows):
        start = k * stride_seconds
        i0 = int(round(start * rate))
        if i0 + t_win > n:
            break  # numerical guard; starts above are grid-aligned
        i1 = i0 + t_win
        if i1 <= n - 1:
            span = (i1 - i0) / rate
        else:
            i1 = n - 1
            span = (i1 - i0) / rate
        label = (gt.positions[i1] - gt.positions[i0]) / span
        windows.append(ImuWindow(signal=channels[:, i0:i0 + t_win],
                                 label_velocity=label,
                                 window_start=i0 / rate))
    return windows


def stack_windows(windows: list[ImuWindow], dtype=np.float32):
    """Windows -> (X, Y) training arrays of shape (N,6,T) and (N,2)."""
    if not windows:
        raise DataError("no windows to stack")
    x = np.stack([w.signal for w in windows]).astype(dtype)
    y = np.stack([w.label_velocity for w in windows]).astype(dtype)
    return x, y
