"""The architecture ablation ladder and its runner.

Variants (i)-(v) walk from a ResNet-style baseline to the full design:
(i) encoder blocks on a conv7/maxpool stem, depths [2,2,2,2], widths
[64,128,256,512]; (ii) deepens stage 3; (iii) widens all stages;
(iv) switches to the non-overlapping stem (the full model); (v) swaps
batch norm for layer norm. 'full' and 'no_stgu' round out the set.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .data.dataset import load_split
from .data.windows import make_windows, stack_windows
from .metrics import evaluate
from .nn.accounting import count_parameters
from .nn.model import ModelConfig, build_model
from .training import TrainConfig, train

LADDER = ("i", "ii", "iii", "iv", "v", "full", "no_stgu")


def variant_config(name: str) -> ModelConfig:
    if name == "i":
        return ModelConfig(stem_kind="conv7s2_maxpool", stage_depths=(2, 2, 2, 2),
                           stage_widths=(64, 128, 256, 512))
    if name == "ii":
        return ModelConfig(stem_kind="conv7s2_maxpool", stage_depths=(2, 2, 6, 2),
                           stage_widths=(64, 128, 256, 512))
    if name == "iii":
        return ModelConfig(stem_kind="conv7s2_maxpool", stage_depths=(2, 2, 6, 2),
                           stage_widths=(96, 192, 384, 768))
    if name == "iv" or name == "full":
        return ModelConfig()
    if name == "v":
        return ModelConfig(norm_kind="layer_norm")
    if name == "no_stgu":
        return ModelConfig(stgu_enabled=False)
    raise ValueError(f"unknown variant {name!r}; choose from {LADDER}")


@dataclass(frozen=True)
class LadderRow:
    variant: str
    params: int
    val_mse: float
    ate_norm: float
    rte_norm: float
    ale_norm: float


def _collect(data_dir, split, window, stride):
    xs, ys = [], []
    for _, seq, gt in load_split(data_dir, split):
        x, y = stack_windows(make_windows(seq, gt, window, stride))
        xs.append(x)
        ys.append(y)
    if not xs:
        raise ValueError(f"split {split!r} is empty")
    return np.concatenate(xs), np.concatenate(ys)


def run_ladder(data_dir, epochs: int = 10, batch_size: int = 64, seed: int = 0,
               window_seconds: float = 1.0, stride_seconds: float = 0.25,
               horizon: float = 60.0, log=print) -> list:
    """Train every variant for a fixed short budget; metrics on the test split.

    Numbers from this smoke budget characterize the ladder's plumbing, not
    converged accuracy.
    """
    train_set = _collect(data_dir, "train", window_seconds, stride_seconds)
    val_set = _collect(data_dir, "val", window_seconds, stride_seconds)
    sample_rate = train_set[0].shape[2] / window_seconds
    rows = []
    for name in LADDER:
        config = variant_config(name)
        model = build_model(config, init_seed=seed)
        tc = TrainConfig(batch_size=batch_size, max_epochs=epochs, rng_seed=seed,
                         window_seconds=window_seconds,
                         stride_seconds=stride_seconds)
        meta = {"sample_rate_hz": sample_rate, "window_seconds": window_seconds}
        result = train(model, train_set, val_set, tc, metadata=meta)
        report = evaluate(result.checkpoint, data_dir, split="test",
                          horizon=horizon)
        agg = report.aggregates
        row = LadderRow(variant=name, params=count_parameters(config),
                        val_mse=result.checkpoint.metadata["best_val_mse"],
                        ate_norm=agg["ate_norm"], rte_norm=agg["rte_norm"],
                        ale_norm=agg["ale_norm"])
        rows.append(row)
        log(f"variant {name}: params={row.params} val_mse={row.val_mse:.5f} "
            f"ate_norm={row.ate_norm:.4f} rte_norm={row.rte_norm:.4f} "
            f"ale_norm={row.ale_norm:.4f}")
    return rows


def write_ladder(rows: list, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "params", "val_mse", "ate_norm",
                         "rte_norm", "ale_norm"])
        for r in rows:
            writer.writerow([r.variant, r.params, repr(r.val_mse),
                             repr(r.ate_norm), repr(r.rte_norm),
                             repr(r.ale_norm)])
