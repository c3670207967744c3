"""Self-describing checkpoints: a binary blob of little-endian float32
tensors plus a JSON manifest (`<path>` and `<path>.json`).

The manifest records every tensor's name/shape/offset, the model config,
optimizer and schedule state, and training metadata, so a checkpoint can be
reloaded bit-exactly without any out-of-band knowledge.
"""

import json
import os
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .model import ConfigError, ModelConfig, build_model

FORMAT_VERSION = 1
_DTYPE = "<f4"


class CheckpointError(ValueError):
    """Corrupt or incompatible checkpoint."""


@dataclass
class OptimizerState:
    m: "OrderedDict[str, np.ndarray]"
    v: "OrderedDict[str, np.ndarray]"
    step: int


@dataclass
class ScheduleState:
    lr: float
    best_val_mse: float
    epochs_since_improvement: int


@dataclass
class Checkpoint:
    config: ModelConfig
    params: "OrderedDict[str, np.ndarray]"
    buffers: "OrderedDict[str, np.ndarray]"
    optimizer: OptimizerState | None = None
    schedule: ScheduleState | None = None
    metadata: dict = field(default_factory=dict)

    def build(self):
        """Instantiate a model carrying this checkpoint's tensors."""
        model = build_model(self.config, init_seed=0)
        model.load_state(self.params, self.buffers)
        return model


def _tensor_entries(ckpt: Checkpoint):
    """Yield (manifest_name, array) in the canonical serialization order."""
    for name, arr in ckpt.params.items():
        yield f"param.{name}", arr
    for name, arr in ckpt.buffers.items():
        yield f"buffer.{name}", arr
    if ckpt.optimizer is not None:
        for name, arr in ckpt.optimizer.m.items():
            yield f"adam.m.{name}", arr
        for name, arr in ckpt.optimizer.v.items():
            yield f"adam.v.{name}", arr


def save_checkpoint(ckpt: Checkpoint, path: str | os.PathLike):
    path = os.fspath(path)
    tensors = []
    offset = 0
    blobs = []
    for name, arr in _tensor_entries(ckpt):
        data = np.ascontiguousarray(arr, dtype=_DTYPE).tobytes()
        tensors.append({"name": name, "shape": list(arr.shape),
                        "dtype": _DTYPE, "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": ckpt.config.to_dict(),
        "tensors": tensors,
        "total_bytes": offset,
        "optimizer": None if ckpt.optimizer is None else {"step": ckpt.optimizer.step},
        "schedule": None if ckpt.schedule is None else {
            "lr": ckpt.schedule.lr,
            "best_val_mse": ckpt.schedule.best_val_mse,
            "epochs_since_improvement": ckpt.schedule.epochs_since_improvement,
        },
        "metadata": ckpt.metadata,
    }
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        for blob in blobs:
            fh.write(blob)
    os.replace(tmp, path)
    tmp_json = path + ".json.tmp"
    with open(tmp_json, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp_json, path + ".json")


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    path = os.fspath(path)
    manifest_path = path + ".json"
    if not os.path.exists(path):
        raise CheckpointError(f"missing checkpoint blob {path}")
    if not os.path.exists(manifest_path):
        raise CheckpointError(f"missing checkpoint manifest {manifest_path}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format version "
            f"{manifest.get('format_version')!r} (expected {FORMAT_VERSION})")
    blob = open(path, "rb").read()
    if len(blob) != manifest["total_bytes"]:
        raise CheckpointError(
            f"checkpoint blob is {len(blob)} bytes, manifest expects "
            f"{manifest['total_bytes']} (truncated or corrupt)")
    expected_offset = 0
    arrays = OrderedDict()
    for entry in manifest["tensors"]:
        if entry["offset"] != expected_offset:
            raise CheckpointError(
                f"tensor {entry['name']}: offset {entry['offset']} breaks "
                f"contiguity (expected {expected_offset})")
        if entry["dtype"] != _DTYPE:
            raise CheckpointError(f"tensor {entry['name']}: unsupported dtype "
                                  f"{entry['dtype']}")
        n = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        if entry["nbytes"] != 4 * n:
            raise CheckpointError(f"tensor {entry['name']}: nbytes/shape mismatch")
        raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype=_DTYPE).reshape(
            entry["shape"]).copy()
        expected_offset += entry["nbytes"]
    if expected_offset != manifest["total_bytes"]:
        raise CheckpointError("manifest tensors do not cover the blob")

    try:
        config = ModelConfig.from_dict(manifest["config"])
    except ConfigError as exc:
        raise CheckpointError(f"bad embedded config: {exc}") from exc

    params = OrderedDict()
    buffers = OrderedDict()
    m = OrderedDict()
    v = OrderedDict()
    for name, arr in arrays.items():
        if name.startswith("param."):
            params[name[len("param."):]] = arr
        elif name.startswith("buffer."):
            buffers[name[len("buffer."):]] = arr
        elif name.startswith("adam.m."):
            m[name[len("adam.m."):]] = arr
        elif name.startswith("adam.v."):
            v[name[len("adam.v."):]] = arr
        else:
            raise CheckpointError(f"unrecognized tensor section for {name!r}")

    optimizer = None
    if manifest["optimizer"] is not None:
        if set(m) != set(params) or set(v) != set(params):
            raise CheckpointError("optimizer moments do not match parameters")
        optimizer = OptimizerState(m=m, v=v, step=int(manifest["optimizer"]["step"]))
    elif m or v:
        raise CheckpointError("moment tensors present but optimizer state missing")

    schedule = None
    if manifest["schedule"] is not None:
        s = manifest["schedule"]
        schedule = ScheduleState(lr=float(s["lr"]),
                                 best_val_mse=float(s["best_val_mse"]),
                                 epochs_since_improvement=int(
                                     s["epochs_since_improvement"]))

    ckpt = Checkpoint(config=config, params=params, buffers=buffers,
                      optimizer=optimizer, schedule=schedule,
                      metadata=manifest.get("metadata", {}))
    _validate_against_config(ckpt)
    return ckpt


def _validate_against_config(ckpt: Checkpoint):
    """Parameter names/shapes must match what the embedded config implies."""
    model = build_model(ckpt.config, init_seed=0)
    expected = {name: p.value.shape for name, p in model.named_parameters()}
    got = {name: arr.shape for name, arr in ckpt.params.items()}
    if expected != got:
        missing = sorted(set(expected) - set(got))
        extra = sorted(set(got) - set(expected))
        shapes = [n for n in expected.keys() & got.keys()
                  if expected[n] != got[n]]
        raise CheckpointError(
            f"checkpoint does not match its config: missing {missing[:3]}, "
            f"unexpected {extra[:3]}, shape mismatches {shapes[:3]}")


def strip_optimizer(ckpt: Checkpoint) -> Checkpoint:
    """Inference-only copy (resume will be refused)."""
    return Checkpoint(config=ckpt.config, params=ckpt.params,
                      buffers=ckpt.buffers, optimizer=None,
                      schedule=ckpt.schedule, metadata=dict(ckpt.metadata))
