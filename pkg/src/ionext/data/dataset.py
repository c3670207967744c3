"""Dataset directories: split subdirectories of sequences plus a manifest."""

import csv
import dataclasses
import os
from dataclasses import dataclass

from .io import MANIFEST_FILE, load_sequence, write_sequence
from .synthetic import synthesize
from .types import DataError, SyntheticSpec

SPLITS = ("train", "val", "test")
DEFAULT_WINDOW_SECONDS = 1.0


@dataclass(frozen=True)
class ManifestRow:
    id: str
    split: str
    duration_s: float
    seed: int


def generate_dataset(spec: SyntheticSpec, n_train: int, n_val: int, n_test: int,
                     out_dir, window_seconds: float = DEFAULT_WINDOW_SECONDS
                     ) -> list[ManifestRow]:
    """Write ``<out>/<split>/<id>/{imu.csv,gt.csv}`` plus ``manifest.csv``.

    Sequence k (in train, val, test order) uses seed rng_seed + k, so the
    same arguments always reproduce the same bytes.
    """
    if min(n_train, n_val, n_test) < 0:
        raise DataError("split counts must be >= 0")
    if spec.duration <= 2 * window_seconds:
        raise DataError(
            f"duration {spec.duration} s must exceed twice the window "
            f"({window_seconds} s)")
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    index = 0
    for split, count in zip(SPLITS, (n_train, n_val, n_test)):
        for j in range(count):
            seq_id = f"{split}_{j:03d}"
            seq_spec = dataclasses.replace(spec, rng_seed=spec.rng_seed + index)
            seq, gt = synthesize(seq_spec, sequence_id=seq_id)
            write_sequence(os.path.join(out_dir, split, seq_id), seq, gt)
            rows.append(ManifestRow(id=seq_id, split=split,
                                    duration_s=seq.duration,
                                    seed=seq_spec.rng_seed))
            index += 1
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "split", "duration_s", "seed"])
        for row in rows:
            writer.writerow([row.id, row.split, repr(row.duration_s), row.seed])
    return rows


def read_manifest(data_dir) -> list[ManifestRow]:
    path = os.path.join(data_dir, MANIFEST_FILE)
    if not os.path.exists(path):
        raise DataError(f"missing {path}")
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(ManifestRow(id=rec["id"], split=rec["split"],
                                    duration_s=float(rec["duration_s"]),
                                    seed=int(rec["seed"])))
    return rows


def load_split(data_dir, split: str):
    """Yield (ManifestRow, ImuSequence, GroundTruthTrack) for one split,
    ordered as in the manifest."""
    if split not in SPLITS:
        raise DataError(f"split must be one of {SPLITS}, got {split!r}")
    for row in read_manifest(data_dir):
        if row.split != split:
            continue
        seq, gt = load_sequence(os.path.join(data_dir, split, row.id))
        yield row, seq, gt
