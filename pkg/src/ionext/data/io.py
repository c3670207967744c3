"""On-disk CSV formats.

imu.csv      first line ``# rate_hz=<value>``, header ``t,gx,gy,gz,ax,ay,az``
gt.csv       header ``t,px,py`` with optional ``vx,vy`` columns
manifest.csv header ``id,split,duration_s,seed``

Floats are written with ``repr`` (shortest round-trip form), so a
write/load cycle is value-exact.
"""

import csv
import os

import numpy as np

from .types import DataError, GroundTruthTrack, ImuSequence

IMU_FILE = "imu.csv"
GT_FILE = "gt.csv"
MANIFEST_FILE = "manifest.csv"

_IMU_HEADER = ["t", "gx", "gy", "gz", "ax", "ay", "az"]
_GT_HEADER = ["t", "px", "py"]
_GT_HEADER_V = ["t", "px", "py", "vx", "vy"]


class FormatError(DataError):
    """Malformed file; message carries file and line context."""


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sequence(dir_path, seq: ImuSequence, gt: GroundTruthTrack):
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, IMU_FILE), "w", encoding="utf-8",
              newline="") as fh:
        fh.write(f"# rate_hz={_fmt(seq.sample_rate)}\n")
        fh.write(",".join(_IMU_HEADER) + "\n")
        for i in range(seq.n_samples):
            row = [seq.timestamps[i], *seq.gyro[i], *seq.accel[i]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    header = _GT_HEADER_V if gt.velocities is not None else _GT_HEADER
    with open(os.path.join(dir_path, GT_FILE), "w", encoding="utf-8",
              newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(gt.timestamps)):
            row = [gt.timestamps[i], *gt.positions[i]]
            if gt.velocities is not None:
                row += list(gt.velocities[i])
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_rows(path):
    """Yield (line_number, [floats]); line numbers are physical file lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            yield lineno, row


def load_sequence(dir_path) -> tuple[ImuSequence, GroundTruthTrack]:
    """Load and validate an ``imu.csv`` / ``gt.csv`` pair.

    Raises FormatError naming the file and line of the first problem.
    """
    imu_path = os.path.join(dir_path, IMU_FILE)
    gt_path = os.path.join(dir_path, GT_FILE)
    for p in (imu_path, gt_path):
        if not os.path.exists(p):
            raise FormatError(f"missing file {p}")

    rate = None
    with open(imu_path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("#") and "rate_hz=" in first:
        try:
            rate = float(first.split("rate_hz=")[1])
        except ValueError:
            raise FormatError(f"{imu_path} line 1: bad rate_hz value") from None
    if rate is None:
        raise FormatError(f"{imu_path} line 1: expected '# rate_hz=<value>'")

    rows = []
    header_seen = False
    for lineno, row in _parse_rows(imu_path):
        if not header_seen:
            if [c.strip() for c in row] != _IMU_HEADER:
                raise FormatError(f"{imu_path} line {lineno}: expected header "
                                  f"{','.join(_IMU_HEADER)}")
            header_seen = True
            continue
        if len(row) != 7:
            raise FormatError(f"{imu_path} line {lineno}: expected 7 columns, "
                              f"got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise FormatError(f"{imu_path} line {lineno}: non-numeric field") from None
        if not all(np.isfinite(vals)):
            raise FormatError(f"{imu_path} line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise FormatError(f"{imu_path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)

    gt_rows = []
    has_vel = False
    header_seen = False
    for lineno, row in _parse_rows(gt_path):
        if not header_seen:
            cols = [c.strip() for c in row]
            if cols == _GT_HEADER_V:
                has_vel = True
            elif cols != _GT_HEADER:
                raise FormatError(f"{gt_path} line {lineno}: expected header "
                                  f"t,px,py[,vx,vy]")
            header_seen = True
            continue
        want = 5 if has_vel else 3
        if len(row) != want:
            raise FormatError(f"{gt_path} line {lineno}: expected {want} "
                              f"columns, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise FormatError(f"{gt_path} line {lineno}: non-numeric field") from None
        if not all(np.isfinite(vals)):
            raise FormatError(f"{gt_path} line {lineno}: non-finite value")
        gt_rows.append(vals)
    if not gt_rows:
        raise FormatError(f"{gt_path}: no data rows")
    gt_arr = np.asarray(gt_rows, dtype=np.float64)

    try:
        seq = ImuSequence(
            sequence_id=os.path.basename(os.path.normpath(dir_path)),
            sample_rate=rate,
            timestamps=arr[:, 0],
            gyro=arr[:, 1:4],
            accel=arr[:, 4:7],
        )
        gt = GroundTruthTrack(
            timestamps=gt_arr[:, 0],
            positions=gt_arr[:, 1:3],
            velocities=gt_arr[:, 3:5] if has_vel else None,
        )
    except DataError as exc:
        raise FormatError(f"{dir_path}: {exc}") from exc
    return seq, gt
