"""Command-line surface: every subcommand end to end on small inputs."""

import json
import os
import subprocess
import sys

import pytest

PKG_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

TINY_CFG = """\
stem_kind = nonoverlap_k4s4
stage_depths = 1,1,1,1
stage_widths = 4,8,8,8
"""

TRAIN_CFG = """\
batch_size = 16
max_epochs = 2
initial_lr = 0.001
rng_seed = 3
window_seconds = 1.0
stride_seconds = 0.5
"""


def run_cli(*args, check=True):
    proc = subprocess.run([sys.executable, "-m", "ionext", *args],
                          capture_output=True, text=True, cwd=PKG_ROOT)
    if check and proc.returncode != 0:
        raise AssertionError(f"command {args} failed:\n{proc.stdout}\n{proc.stderr}")
    return proc


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    (ws / "tiny.cfg").write_text(TINY_CFG)
    (ws / "train.cfg").write_text(TRAIN_CFG)
    run_cli("generate", "--out", str(ws / "data"), "--num-train", "2",
            "--num-val", "1", "--num-test", "1", "--duration", "8",
            "--rate", "50", "--seed", "7", "--heading-tau", "4")
    return ws


def test_generate_layout_and_manifest(workspace):
    data = workspace / "data"
    assert (data / "manifest.csv").exists()
    assert (data / "run_manifest.json").exists()
    rows = (data / "manifest.csv").read_text().splitlines()
    assert rows[0] == "id,split,duration_s,seed"
    assert len(rows) == 5
    manifest = json.loads((data / "run_manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert manifest["args"]["seed"] == 7


def test_generate_is_reproducible(workspace, tmp_path):
    run_cli("generate", "--out", str(tmp_path / "data2"), "--num-train", "2",
            "--num-val", "1", "--num-test", "1", "--duration", "8",
            "--rate", "50", "--seed", "7", "--heading-tau", "4")
    a = (workspace / "data" / "train" / "train_000" / "imu.csv").read_bytes()
    b = (tmp_path / "data2" / "train" / "train_000" / "imu.csv").read_bytes()
    assert a == b


def test_generate_duration_too_short(workspace):
    proc = run_cli("generate", "--out", str(workspace / "bad"),
                   "--duration", "0.5", check=False)
    assert proc.returncode == 1
    assert "window" in proc.stderr


def test_train_eval_cycle(workspace):
    out = workspace / "run"
    proc = run_cli("train", "--data", str(workspace / "data"),
                   "--out", str(out), "--model-config", str(workspace / "tiny.cfg"),
                   "--train-config", str(workspace / "train.cfg"))
    assert "stop_reason: max_epochs" in proc.stdout
    assert (out / "model.ckpt").exists()
    assert (out / "model.ckpt.json").exists()
    assert (out / "history.csv").exists()
    assert (out / "run_manifest.json").exists()

    rep = workspace / "report"
    run_cli("eval", "--data", str(workspace / "data"), "--split", "test",
            "--ckpt", str(out / "model.ckpt"), "--report-dir", str(rep),
            "--horizon", "30")
    for name in ("report.csv", "aggregates.csv", "cdf_ate.csv", "cdf_rte.csv",
                 "run_manifest.json"):
        assert (rep / name).exists()
    manifest = json.loads((rep / "run_manifest.json").read_text())
    assert manifest["args"]["horizon"] == 30.0


def test_train_missing_data_dir(workspace):
    proc = run_cli("train", "--data", str(workspace / "nope"),
                   "--out", str(workspace / "x"), check=False)
    assert proc.returncode == 1
    assert "nope" in proc.stderr


def test_eval_rate_mismatch(workspace, tmp_path):
    run_cli("generate", "--out", str(tmp_path / "d100"), "--num-train", "0",
            "--num-val", "0", "--num-test", "1", "--duration", "8",
            "--rate", "100", "--seed", "1")
    proc = run_cli("eval", "--data", str(tmp_path / "d100"),
                   "--ckpt", str(workspace / "run" / "model.ckpt"),
                   "--report-dir", str(tmp_path / "rep"), check=False)
    assert proc.returncode == 1
    assert "Hz" in proc.stderr


def test_resume_continues(workspace):
    out = workspace / "resumed"
    ckpt_meta = json.loads(
        (workspace / "run" / "model.ckpt.json").read_text())["metadata"]
    proc = run_cli("train", "--data", str(workspace / "data"),
                   "--out", str(out), "--train-config", str(workspace / "train.cfg"),
                   "--model-config", str(workspace / "tiny.cfg"),
                   "--resume", str(workspace / "run" / "model.ckpt"),
                   "--epochs", "4")
    history = (out / "history.csv").read_text().splitlines()
    first_epoch = int(history[1].split(",")[0])
    # numbering continues from the checkpoint's (best-validation) epoch
    assert first_epoch == ckpt_meta["epoch"] + 1
    assert int(history[-1].split(",")[0]) == 4
    assert "stop_reason" in proc.stdout


def test_inspect_prints_accounting(workspace):
    proc = run_cli("inspect", "--length", "200")
    out = proc.stdout
    assert "stage1: 96 x 50" in out
    assert "stage2: 192 x 25" in out
    assert "stage3: 384 x 12" in out
    assert "stage4: 768 x 6" in out
    assert "analytic" in out and "runtime" in out
    assert "1.1e+07" in out and "7.3e+07" in out


def test_inspect_variant_i(workspace):
    proc = run_cli("inspect", "--variant", "i", "--length", "200")
    assert "'stage_widths': [64, 128, 256, 512]" in proc.stdout
    assert "'stage_depths': [2, 2, 2, 2]" in proc.stdout


def test_gradcheck_cli_passes(workspace):
    proc = run_cli("gradcheck", "--samples", "40")
    assert "PASS" in proc.stdout


def test_gradcheck_cli_channel_axis(workspace):
    proc = run_cli("gradcheck", "--samples", "40", "--gating-axis", "channel")
    assert "PASS" in proc.stdout


def test_gradcheck_cli_impossible_tolerance(workspace):
    proc = run_cli("gradcheck", "--samples", "20", "--tolerance", "1e-12",
                   check=False)
    assert proc.returncode == 1
    assert "FAIL" in proc.stdout


def test_ablate_writes_ladder(workspace, tmp_path):
    out = tmp_path / "ladder"
    run_cli("ablate", "--data", str(workspace / "data"), "--out", str(out),
            "--epochs", "1", "--stride", "1.0", "--horizon", "8")
    lines = (out / "ladder.csv").read_text().splitlines()
    assert lines[0] == "variant,params,val_mse,ate_norm,rte_norm,ale_norm"
    variants = [ln.split(",")[0] for ln in lines[1:]]
    assert variants == ["i", "ii", "iii", "iv", "v", "full", "no_stgu"]
    assert (out / "run_manifest.json").exists()


def test_rerun_from_manifest_reproduces_outputs(workspace, tmp_path):
    """Re-issuing the exact command from a run manifest gives identical bytes."""
    manifest = json.loads((workspace / "run" / "run_manifest.json").read_text())
    args = manifest["args"]
    out2 = tmp_path / "rerun"
    run_cli("train", "--data", args["data"], "--out", str(out2),
            "--model-config", args["model_config"],
            "--train-config", args["train_config"])
    a = (workspace / "run" / "model.ckpt").read_bytes()
    b = (out2 / "model.ckpt").read_bytes()
    assert a == b
