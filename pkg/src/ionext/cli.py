"""Command-line entry point.

Subcommands: generate | train | eval | inspect | ablate | gradcheck.
Every command that writes files also drops a ``run_manifest.json`` beside
them with the fully resolved configuration, seeds and paths, sufficient to
re-run it identically. All commands are non-interactive and exit nonzero
on error.
"""

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .ablation import LADDER, run_ladder, variant_config, write_ladder
from .data.dataset import generate_dataset, load_split
from .data.types import SyntheticSpec
from .data.windows import make_windows, stack_windows
from .kernels import backend_name
from .metrics import evaluate, write_report
from .nn.accounting import (
    FLOP_CONVENTION,
    REFERENCE_FLOPS,
    REFERENCE_PARAMS,
    count_parameters,
    count_parameters_runtime,
    estimate_flops,
)
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.model import ModelConfig, build_model, load_model_config, tiny_config
from .training import TrainConfig, gradcheck, train, write_history


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(out_dir, command: str, args: argparse.Namespace,
                    started: str, outputs: list):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "kernel_backend": backend_name(),
        "args": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "outputs": sorted(outputs),
        "started_utc": started,
        "finished_utc": _utc_now(),
    }
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "run_manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)


def _load_train_config(path, overrides: dict) -> TrainConfig:
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, raw = line.partition("=")
                key = key.strip()
                if not sep or key not in fields:
                    raise ValueError(f"{path} line {lineno}: unknown or "
                                     f"malformed entry {line!r}")
                ftype = fields[key].type
                raw = raw.strip()
                values[key] = int(raw) if ftype in (int, "int") else float(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def _resolve_model_config(args) -> ModelConfig:
    if getattr(args, "model_config", None):
        return load_model_config(args.model_config)
    if getattr(args, "variant", None):
        return variant_config(args.variant)
    if getattr(args, "tiny", False):
        return tiny_config()
    return ModelConfig()


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    started = _utc_now()
    spec = SyntheticSpec(
        duration=args.duration, sample_rate=args.rate,
        speed_range=(args.speed_min, args.speed_max),
        heading_smoothness=args.heading_tau,
        noise_std_gyro=args.noise_gyro, noise_std_accel=args.noise_accel,
        bias_std_gyro=args.bias_gyro, bias_std_accel=args.bias_accel,
        rng_seed=args.seed)
    rows = generate_dataset(spec, args.num_train, args.num_val, args.num_test,
                            args.out, window_seconds=args.window)
    print(f"wrote {len(rows)} sequences to {args.out}")
    _write_manifest(args.out, "generate", args, started,
                    [f"{r.split}/{r.id}" for r in rows] + ["manifest.csv"])
    return 0


def _collect_split(data_dir, split, window, stride):
    xs, ys, rate = [], [], None
    for _, seq, gt in load_split(data_dir, split):
        if rate is None:
            rate = seq.sample_rate
        elif abs(rate - seq.sample_rate) > 1e-9:
            raise ValueError(f"mixed sample rates in split {split!r}")
        x, y = stack_windows(make_windows(seq, gt, window, stride))
        xs.append(x)
        ys.append(y)
    if not xs:
        raise ValueError(f"split {split!r} of {data_dir} is empty")
    return np.concatenate(xs), np.concatenate(ys), rate


def cmd_train(args) -> int:
    started = _utc_now()
    config = _resolve_model_config(args)
    tc = _load_train_config(args.train_config, {
        "rng_seed": args.seed,
        "batch_size": args.batch_size,
        "max_epochs": args.epochs,
        "window_seconds": args.window,
        "stride_seconds": args.stride,
    })
    resume = None
    if args.resume:
        resume = load_checkpoint(args.resume)
        config = resume.config
    x_tr, y_tr, rate = _collect_split(args.data, "train",
                                      tc.window_seconds, tc.stride_seconds)
    x_va, y_va, _ = _collect_split(args.data, "val",
                                   tc.window_seconds, tc.stride_seconds)
    model = build_model(config, init_seed=tc.rng_seed)
    meta = {"sample_rate_hz": rate, "window_seconds": tc.window_seconds,
            "rng_seed": tc.rng_seed}
    result = train(model, (x_tr, y_tr), (x_va, y_va), tc,
                   metadata=meta, resume=resume)
    os.makedirs(args.out, exist_ok=True)
    ckpt_path = os.path.join(args.out, "model.ckpt")
    save_checkpoint(result.checkpoint, ckpt_path)
    write_history(os.path.join(args.out, "history.csv"), result.history)
    _write_manifest(args.out, "train", args, started,
                    ["model.ckpt", "model.ckpt.json", "history.csv"])
    if result.history:
        last = result.history[-1]
        print(f"epochs {len(result.history)}, best val mse "
              f"{result.checkpoint.metadata['best_val_mse']:.6f}, "
              f"final lr {last.lr:g}")
    if result.stop_reason == "nan_abort":
        d = result.diagnostics
        print(f"stop_reason: nan_abort (epoch {d.get('epoch')}, "
              f"batch {d.get('batch_index')})", file=sys.stderr)
        return 1
    print(f"stop_reason: {result.stop_reason}")
    return 0


def cmd_eval(args) -> int:
    started = _utc_now()
    ckpt = load_checkpoint(args.ckpt)
    report = evaluate(ckpt, args.data, split=args.split, horizon=args.horizon,
                      stride=args.stride)
    write_report(report, args.report_dir)
    _write_manifest(args.report_dir, "eval", args, started,
                    ["report.csv", "aggregates.csv", "cdf_ate.csv",
                     "cdf_rte.csv"])
    for name, value in report.aggregates.items():
        print(f"{name}: {value:.6f}")
    return 0


def cmd_inspect(args) -> int:
    started = _utc_now()
    config = _resolve_model_config(args)
    model = build_model(config, init_seed=0)
    analytic = count_parameters(config)
    runtime = count_parameters_runtime(model)
    flops = estimate_flops(config, args.length)
    lines = [
        f"config: {config.to_dict()}",
        f"input length T={args.length}",
    ]
    lengths = model.stage_lengths(args.length)
    for i, (w, t) in enumerate(zip(config.stage_widths, lengths), start=1):
        lines.append(f"stage{i}: {w} x {t}  ({config.stage_depths[i-1]} blocks)")
    lines += [
        f"output: {config.output_dim}-vector",
        f"parameters: analytic {analytic}, runtime {runtime}",
        f"flops estimate at T={args.length}: {flops}  [{FLOP_CONVENTION}]",
        f"published reference for the default full-width architecture: "
        f"params {REFERENCE_PARAMS:.1e}, flops {REFERENCE_FLOPS:.1e}; this "
        f"implementation counts only the layers it defines, so its own "
        f"figures (above) may legitimately differ.",
    ]
    text = "\n".join(lines)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "inspect.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write(text + "\n")
        _write_manifest(args.out, "inspect", args, started, ["inspect.txt"])
    return 0


def cmd_ablate(args) -> int:
    started = _utc_now()
    rows = run_ladder(args.data, epochs=args.epochs, batch_size=args.batch_size,
                      seed=args.seed, window_seconds=args.window,
                      stride_seconds=args.stride, horizon=args.horizon)
    os.makedirs(args.out, exist_ok=True)
    write_ladder(rows, os.path.join(args.out, "ladder.csv"))
    _write_manifest(args.out, "ablate", args, started, ["ladder.csv"])
    print(f"ablation ladder written to {os.path.join(args.out, 'ladder.csv')} "
          f"(smoke budget: {args.epochs} epochs; not converged accuracy)")
    return 0


def cmd_gradcheck(args) -> int:
    started = _utc_now()
    config = tiny_config(
        stgu_enabled=not args.no_stgu,
        stgu_gating_axis=args.gating_axis)
    report = gradcheck(config, tolerance=args.tolerance, seed=args.seed,
                       n_samples=args.samples)
    print(report.summary())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "gradcheck.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(report), fh, indent=1, sort_keys=True)
            fh.write("\n")
        _write_manifest(args.out, "gradcheck", args, started,
                        ["gradcheck.json"])
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ionext",
        description="Inertial odometry: synthetic data, training, "
                    "trajectory evaluation and architecture tools.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a dataset with ground truth")
    g.add_argument("--out", required=True)
    g.add_argument("--num-train", type=int, default=4)
    g.add_argument("--num-val", type=int, default=1)
    g.add_argument("--num-test", type=int, default=1)
    g.add_argument("--duration", type=float, default=60.0)
    g.add_argument("--rate", type=float, default=200.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--window", type=float, default=1.0,
                   help="window length the dataset must support")
    g.add_argument("--speed-min", type=float, default=0.6)
    g.add_argument("--speed-max", type=float, default=1.8)
    g.add_argument("--heading-tau", type=float, default=8.0)
    g.add_argument("--noise-gyro", type=float, default=0.002)
    g.add_argument("--noise-accel", type=float, default=0.02)
    g.add_argument("--bias-gyro", type=float, default=0.0005)
    g.add_argument("--bias-accel", type=float, default=0.005)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model on a generated dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--model-config", help="flat key=value model config file")
    t.add_argument("--variant", choices=LADDER, help="use a ladder config")
    t.add_argument("--tiny", action="store_true", help="use the tiny config")
    t.add_argument("--train-config", help="flat key=value training config file")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--batch-size", type=int, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--window", type=float, default=None)
    t.add_argument("--stride", type=float, default=None)
    t.add_argument("--resume", help="checkpoint to resume from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    e.add_argument("--data", required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--report-dir", required=True)
    e.add_argument("--horizon", type=float, default=60.0)
    e.add_argument("--stride", type=float, default=None,
                   help="reconstruction stride; defaults to the training window")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="architecture summary and accounting")
    i.add_argument("--model-config")
    i.add_argument("--variant", choices=LADDER)
    i.add_argument("--tiny", action="store_true")
    i.add_argument("--length", type=int, default=200)
    i.add_argument("--out")
    i.set_defaults(func=cmd_inspect)

    a = sub.add_parser("ablate", help="run the architecture ablation ladder")
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--epochs", type=int, default=10)
    a.add_argument("--batch-size", type=int, default=64)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--window", type=float, default=1.0)
    a.add_argument("--stride", type=float, default=0.25)
    a.add_argument("--horizon", type=float, default=60.0)
    a.set_defaults(func=cmd_ablate)

    c = sub.add_parser("gradcheck", help="finite-difference gradient check")
    c.add_argument("--tolerance", type=float, default=1e-4)
    c.add_argument("--gating-axis", choices=("time", "channel"), default="time")
    c.add_argument("--no-stgu", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--out")
    c.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single non-interactive surface
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
