"""Trajectory reconstruction and error metrics.

Positions are reconstructed by integrating per-window average velocities
from the ground-truth start point. ATE is the RMSE of positions at the
prediction timestamps (no alignment transform), RTE the RMSE of relative
displacements over a fixed horizon, ALE the absolute difference of path
lengths. Aggregates divide summed metric values by summed ground-truth
lengths, which makes them dimensionless and length-weighted.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from .data.dataset import load_split
from .data.types import DataError, GroundTruthTrack
from .data.windows import make_windows, stack_windows
from .nn.checkpoint import Checkpoint


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Integrated positions at window boundaries, anchored at the ground
    truth start."""

    timestamps: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        if self.positions.shape != (len(self.timestamps), 2):
            raise MetricError("positions must be (N, 2) matching timestamps")
        if not np.isfinite(self.positions).all():
            raise MetricError("non-finite reconstructed position")


def reconstruct(velocities: np.ndarray, stride: float,
                origin=(0.0, 0.0), t0: float = 0.0) -> TrajectoryEstimate:
    """p[0] = origin; p[n+1] = p[n] + v[n] * stride."""
    velocities = np.asarray(velocities, dtype=np.float64)
    if velocities.ndim != 2 or velocities.shape[1] != 2 or len(velocities) == 0:
        raise MetricError(f"need a (K,2) velocity array, got {velocities.shape}")
    if stride <= 0:
        raise MetricError("stride must be positive")
    positions = np.empty((len(velocities) + 1, 2))
    positions[0] = origin
    np.cumsum(velocities * stride, axis=0, out=positions[1:])
    positions[1:] += np.asarray(origin, dtype=np.float64)
    times = t0 + stride * np.arange(len(velocities) + 1)
    return TrajectoryEstimate(timestamps=times, positions=positions)


def path_length(positions: np.ndarray) -> float:
    positions = np.asarray(positions, dtype=np.float64)
    if len(positions) < 2:
        raise MetricError("need at least 2 points for a path length")
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


def _interp_positions(gt: GroundTruthTrack, times: np.ndarray) -> np.ndarray:
    """Linear interpolation of ground truth at the prediction timestamps.

    Times may overshoot the track by up to two sample periods (the nominal
    sequence end lies one period past the last stamp); they are clamped.
    """
    t = gt.timestamps
    dt = np.median(np.diff(t)) if len(t) > 1 else 0.0
    if times[0] > t[-1] + 2 * dt or times[-1] < t[0] - 2 * dt:
        raise MetricError("prediction and ground truth time ranges do not overlap")
    if times[0] < t[0] - 2 * dt or times[-1] > t[-1] + 2 * dt:
        raise MetricError("prediction timestamps extend beyond ground truth")
    px = np.interp(times, t, gt.positions[:, 0])
    py = np.interp(times, t, gt.positions[:, 1])
    return np.stack([px, py], axis=1)


def ate(pred: TrajectoryEstimate, gt: GroundTruthTrack) -> float:
    """RMSE of positions at the prediction timestamps."""
    ref = _interp_positions(gt, pred.timestamps)
    err = np.linalg.norm(pred.positions - ref, axis=1)
    return float(np.sqrt(np.mean(err ** 2)))


def rte(pred: TrajectoryEstimate, gt: GroundTruthTrack,
        horizon: float = 60.0) -> float:
    """RMSE of relative displacement errors over ``horizon`` seconds.

    For trajectories shorter than the horizon, the full-span error is
    scaled by horizon / duration.
    """
    if horizon <= 0:
        raise MetricError("horizon must be positive")
    times = pred.timestamps
    ref = _interp_positions(gt, times)
    duration = times[-1] - times[0]
    if duration <= 0:
        raise MetricError("degenerate prediction time range")
    if duration < horizon:
        dp = pred.positions[-1] - pred.positions[0]
        dg = ref[-1] - ref[0]
        return float(np.linalg.norm(dp - dg) * (horizon / duration))
    errs = []
    for i, t_start in enumerate(times):
        t_end = t_start + horizon
        if t_end > times[-1] + 1e-9:
            break
        j = int(np.searchsorted(times, t_end - 1e-9))
        dp = pred.positions[j] - pred.positions[i]
        dg = ref[j] - ref[i]
        errs.append(np.linalg.norm(dp - dg))
    return float(np.sqrt(np.mean(np.square(errs))))


def ale(pred: TrajectoryEstimate, gt: GroundTruthTrack) -> float:
    """|predicted path length - ground-truth path length|."""
    return float(abs(path_length(pred.positions) - path_length(gt.positions)))


def normalize(values, lengths) -> float:
    """Length-weighted aggregate: sum(values) / sum(lengths)."""
    values = np.asarray(values, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.float64)
    if len(values) == 0 or len(values) != len(lengths):
        raise MetricError("values and lengths must be equal-length, non-empty")
    if np.any(lengths <= 0):
        raise MetricError("trajectory lengths must be positive")
    return float(values.sum() / lengths.sum())


# ---------------------------------------------------------------------------
# whole-split evaluation


@dataclass(frozen=True)
class TrajectoryRow:
    id: str
    length_gt: float
    length_pred: float
    ate: float
    rte: float
    ale: float


@dataclass
class MetricReport:
    rows: list
    horizon: float
    stride: float

    @property
    def aggregates(self) -> dict:
        lengths = [r.length_gt for r in self.rows]
        return {
            "ate_norm": normalize([r.ate for r in self.rows], lengths),
            "rte_norm": normalize([r.rte for r in self.rows], lengths),
            "ale_norm": normalize([r.ale for r in self.rows], lengths),
        }

    def cdf(self, metric: str) -> list:
        values = sorted(getattr(r, metric) for r in self.rows)
        n = len(values)
        return [(v, (i + 1) / n) for i, v in enumerate(values)]


def evaluate_sequence(model, seq, gt, window_seconds: float, stride: float,
                      horizon: float, batch_size: int = 256) -> TrajectoryRow:
    """Run inference over non-overlapping windows and score the trajectory."""
    windows = make_windows(seq, gt, window_seconds, stride)
    x, _ = stack_windows(windows, dtype=model.dtype)
    preds = []
    for i in range(0, len(x), batch_size):
        preds.append(model.forward(x[i:i + batch_size], training=False))
    velocities = np.concatenate(preds, axis=0)
    est = reconstruct(velocities, stride, origin=gt.positions[0],
                      t0=windows[0].window_start)
    return TrajectoryRow(
        id=seq.sequence_id,
        length_gt=path_length(gt.positions),
        length_pred=path_length(est.positions),
        ate=ate(est, gt),
        rte=rte(est, gt, horizon),
        ale=ale(est, gt),
    )


def evaluate(ckpt: Checkpoint, data_dir, split: str = "test",
             horizon: float = 60.0, stride: float | None = None,
             batch_size: int = 256) -> MetricReport:
    """Evaluate a checkpoint over one dataset split.

    The window length comes from the checkpoint's training metadata; the
    reconstruction stride defaults to it (non-overlapping windows). The
    data rate must match the checkpoint's training rate.
    """
    window_seconds = float(ckpt.metadata.get("window_seconds", 1.0))
    ckpt_rate = ckpt.metadata.get("sample_rate_hz")
    stride = window_seconds if stride is None else float(stride)
    model = ckpt.build()
    rows = []
    for _, seq, gt in load_split(data_dir, split):
        if ckpt_rate is not None and abs(seq.sample_rate - ckpt_rate) > 1e-9:
            raise DataError(
                f"checkpoint was trained at {ckpt_rate} Hz but sequence "
                f"{seq.sequence_id} is sampled at {seq.sample_rate} Hz")
        rows.append(evaluate_sequence(model, seq, gt, window_seconds,
                                      stride, horizon, batch_size))
    if not rows:
        raise DataError(f"split {split!r} has no sequences")
    return MetricReport(rows=rows, horizon=horizon, stride=stride)


# ---------------------------------------------------------------------------
# report files


def write_report(report: MetricReport, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "L_gt", "L_pred", "ate", "rte", "ale"])
        for r in report.rows:
            writer.writerow([r.id, repr(r.length_gt), repr(r.length_pred),
                             repr(r.ate), repr(r.rte), repr(r.ale)])
    with open(os.path.join(out_dir, "aggregates.csv"), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in report.aggregates.items():
            writer.writerow([name, repr(value)])
    for metric in ("ate", "rte"):
        with open(os.path.join(out_dir, f"cdf_{metric}.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "cum_frac"])
            for value, frac in report.cdf(metric):
                writer.writerow([repr(value), repr(frac)])


def read_report_rows(path) -> list:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(TrajectoryRow(
                id=rec["id"], length_gt=float(rec["L_gt"]),
                length_pred=float(rec["L_pred"]), ate=float(rec["ate"]),
                rte=float(rec["rte"]), ale=float(rec["ale"])))
    return rows
