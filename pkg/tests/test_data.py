"""Data layer: CSV formats, validation, windowing, synthetic generator."""

import os

import numpy as np
import pytest

from ionext import SyntheticSpec, make_windows, synthesize
from ionext.data import (
    DataError,
    FormatError,
    GroundTruthTrack,
    ImuSequence,
    generate_dataset,
    load_sequence,
    read_manifest,
    stack_windows,
    write_sequence,
)
from ionext.data.synthetic import GRAVITY, ideal_signals


def make_track(rate, n, speed=(1.0, 0.0)) -> tuple:
    t = np.arange(n) / rate
    gyro = np.zeros((n, 3))
    accel = np.zeros((n, 3))
    accel[:, 2] = GRAVITY
    seq = ImuSequence("manual", rate, t, gyro, accel)
    pos = np.outer(t, np.asarray(speed))
    return seq, GroundTruthTrack(timestamps=t, positions=pos)


# -- sequence validation ------------------------------------------------------


def test_sequence_rejects_nan():
    t = np.arange(100) / 100.0
    g = np.zeros((100, 3))
    a = np.zeros((100, 3))
    a[17, 1] = np.nan
    with pytest.raises(DataError, match="17"):
        ImuSequence("x", 100.0, t, g, a)


def test_sequence_rejects_rate_mismatch():
    t = np.arange(100) / 100.0
    with pytest.raises(DataError, match="spacing"):
        ImuSequence("x", 200.0, t, np.zeros((100, 3)), np.zeros((100, 3)))


def test_sequence_rejects_non_monotone():
    t = np.arange(100) / 100.0
    t[50], t[51] = t[51], t[50]
    with pytest.raises(DataError, match="increasing"):
        ImuSequence("x", 100.0, t, np.zeros((100, 3)), np.zeros((100, 3)))


# -- csv round trip -----------------------------------------------------------


def test_write_load_roundtrip_exact(tmp_path):
    spec = SyntheticSpec(duration=5.0, sample_rate=100.0, rng_seed=2)
    seq, gt = synthesize(spec, sequence_id="rt")
    d = tmp_path / "rt"
    write_sequence(d, seq, gt)
    seq2, gt2 = load_sequence(d)
    assert seq2.sample_rate == seq.sample_rate
    np.testing.assert_array_equal(seq2.timestamps, seq.timestamps)
    np.testing.assert_array_equal(seq2.gyro, seq.gyro)
    np.testing.assert_array_equal(seq2.accel, seq.accel)
    np.testing.assert_array_equal(gt2.positions, gt.positions)
    np.testing.assert_array_equal(gt2.velocities, gt.velocities)


def test_loader_expected_sample_count(tmp_path):
    spec = SyntheticSpec(duration=60.0, sample_rate=200.0, rng_seed=0)
    seq, gt = synthesize(spec)
    write_sequence(tmp_path / "s", seq, gt)
    seq2, _ = load_sequence(tmp_path / "s")
    assert seq2.n_samples == 12000


def test_loader_missing_file(tmp_path):
    with pytest.raises(FormatError, match="missing"):
        load_sequence(tmp_path / "nope")


def test_loader_nan_row_names_line(tmp_path):
    spec = SyntheticSpec(duration=2.0, sample_rate=50.0, rng_seed=0)
    seq, gt = synthesize(spec, "bad")
    d = tmp_path / "bad"
    write_sequence(d, seq, gt)
    lines = open(d / "imu.csv").read().splitlines()
    parts = lines[12].split(",")
    parts[4] = "nan"
    lines[12] = ",".join(parts)
    open(d / "imu.csv", "w").write("\n".join(lines) + "\n")
    with pytest.raises(FormatError, match="line 13"):
        load_sequence(d)


def test_loader_shuffled_gt_timestamps(tmp_path):
    spec = SyntheticSpec(duration=2.0, sample_rate=50.0, rng_seed=0)
    seq, gt = synthesize(spec, "shuf")
    d = tmp_path / "shuf"
    write_sequence(d, seq, gt)
    lines = open(d / "gt.csv").read().splitlines()
    lines[5], lines[20] = lines[20], lines[5]
    open(d / "gt.csv", "w").write("\n".join(lines) + "\n")
    with pytest.raises(FormatError, match="increasing"):
        load_sequence(d)


# -- windowing ----------------------------------------------------------------


def test_window_count_formula():
    seq, gt = make_track(200.0, 2000)  # 10 s
    assert len(make_windows(seq, gt, 1.0, 1.0)) == 10
    assert len(make_windows(seq, gt, 1.0, 0.5)) == 19
    assert len(make_windows(seq, gt, 2.0, 0.25)) == 33


def test_window_constant_velocity_labels():
    seq, gt = make_track(100.0, 1000, speed=(1.0, 0.0))
    for w in make_windows(seq, gt, 1.0, 0.25):
        np.testing.assert_allclose(w.label_velocity, [1.0, 0.0], atol=1e-12)


def test_window_shapes_and_starts():
    seq, gt = make_track(200.0, 2000)
    wins = make_windows(seq, gt, 1.0, 0.5)
    assert all(w.signal.shape == (6, 200) for w in wins)
    np.testing.assert_allclose([w.window_start for w in wins],
                               0.5 * np.arange(19))


def test_window_too_short_sequence():
    seq, gt = make_track(100.0, 50)
    with pytest.raises(DataError, match="shorter"):
        make_windows(seq, gt, 1.0, 1.0)


def test_window_circle_chord_below_arc_speed():
    rate, radius, omega = 200.0, 5.0, 0.8
    n = 4001
    t = np.arange(n) / rate
    pos = radius * np.stack([np.cos(omega * t), np.sin(omega * t)], axis=1)
    gyro = np.zeros((n, 3))
    accel = np.zeros((n, 3))
    seq = ImuSequence("circle", rate, t, gyro, accel)
    gt = GroundTruthTrack(timestamps=t, positions=pos)
    wins = make_windows(seq, gt, 1.0, 1.0)
    speed = radius * omega
    expected_chord = 2 * radius * np.sin(omega * 1.0 / 2)  # analytic
    for w in wins:
        mag = np.linalg.norm(w.label_velocity)
        assert mag < speed
        np.testing.assert_allclose(mag, expected_chord, rtol=1e-9)


def test_window_label_telescoping(clean_sequence):
    seq, gt = clean_sequence
    wins = make_windows(seq, gt, 1.0, 1.0)
    assert len(wins) == 20
    p = gt.positions[0].copy()
    for w in wins:
        p = p + w.label_velocity * 1.0
        idx = int(round((w.window_start + 1.0) * seq.sample_rate))
        np.testing.assert_allclose(p, gt.positions[idx], atol=1e-9)


def test_stack_windows_dtype_and_shape(clean_sequence):
    seq, gt = clean_sequence
    x, y = stack_windows(make_windows(seq, gt, 1.0, 1.0))
    assert x.shape == (20, 6, 200) and x.dtype == np.float32
    assert y.shape == (20, 2) and y.dtype == np.float32


# -- synthesizer --------------------------------------------------------------


def test_synthesize_zero_dynamics():
    spec = SyntheticSpec(duration=10.0, sample_rate=100.0, speed_range=(1.0, 1.0),
                         heading_smoothness=0.0, noise_std_gyro=0.0,
                         noise_std_accel=0.0, bias_std_gyro=0.0,
                         bias_std_accel=0.0, rng_seed=5)
    seq, gt = synthesize(spec)
    np.testing.assert_array_equal(seq.gyro, 0.0)
    np.testing.assert_allclose(seq.accel[:, :2], 0.0, atol=1e-15)
    np.testing.assert_allclose(seq.accel[:, 2], GRAVITY)
    segs = np.diff(gt.positions, axis=0)
    cross = segs[:, 0] * segs[0, 1] - segs[:, 1] * segs[0, 0]
    np.testing.assert_allclose(cross, 0.0, atol=1e-12)


def test_synthesize_deterministic(tmp_path):
    spec = SyntheticSpec(duration=3.0, sample_rate=100.0, rng_seed=9)
    a = synthesize(spec)
    b = synthesize(spec)
    np.testing.assert_array_equal(a[0].accel, b[0].accel)
    write_sequence(tmp_path / "a", *a)
    write_sequence(tmp_path / "b", *b)
    assert (tmp_path / "a/imu.csv").read_bytes() == (tmp_path / "b/imu.csv").read_bytes()
    assert (tmp_path / "a/gt.csv").read_bytes() == (tmp_path / "b/gt.csv").read_bytes()


def test_synthesize_noise_std_matches_spec():
    spec = SyntheticSpec(duration=170.0, sample_rate=200.0, rng_seed=4,
                         noise_std_gyro=0.01, noise_std_accel=0.05,
                         bias_std_gyro=0.0, bias_std_accel=0.0)
    seq, _ = synthesize(spec)
    gyro_ideal, accel_ideal = ideal_signals(spec)
    accel_noise = seq.accel - accel_ideal
    gyro_noise = seq.gyro - gyro_ideal
    assert accel_noise.size >= 1e5
    assert abs(accel_noise.std() / 0.05 - 1) < 0.05
    assert abs(gyro_noise.std() / 0.01 - 1) < 0.05


def test_synthesize_speed_stays_in_range():
    spec = SyntheticSpec(duration=60.0, sample_rate=100.0, rng_seed=13,
                         speed_range=(0.5, 2.0))
    _, gt = synthesize(spec)
    speeds = np.linalg.norm(gt.velocities, axis=1)
    assert speeds.min() > 0.5 and speeds.max() < 2.0


def test_synthesize_gyro_integrates_to_heading():
    spec = SyntheticSpec(duration=60.0, sample_rate=200.0, rng_seed=7,
                         noise_std_gyro=0.0, noise_std_accel=0.0,
                         bias_std_gyro=0.0, bias_std_accel=0.0)
    seq, gt = synthesize(spec)
    dt = 1 / 200.0
    theta = np.cumsum((seq.gyro[:-1, 2] + seq.gyro[1:, 2]) / 2 * dt)
    theta_true = np.unwrap(np.arctan2(gt.velocities[:, 1], gt.velocities[:, 0]))
    err = np.abs(theta + theta_true[0] - theta_true[1:]).max()
    assert err < 1.0 / 200.0  # O(1/rate)


def test_synthesize_accel_double_integrates_to_positions():
    spec = SyntheticSpec(duration=60.0, sample_rate=200.0, rng_seed=7,
                         noise_std_gyro=0.0, noise_std_accel=0.0,
                         bias_std_gyro=0.0, bias_std_accel=0.0)
    seq, gt = synthesize(spec)
    dt = 1 / 200.0
    a = seq.accel[:, :2]
    v = gt.velocities[0] + np.vstack(
        [[0, 0], np.cumsum((a[:-1] + a[1:]) / 2 * dt, axis=0)])
    p = gt.positions[0] + np.vstack(
        [[0, 0], np.cumsum((v[:-1] + v[1:]) / 2 * dt, axis=0)])
    assert np.abs(p - gt.positions).max() < 1e-3


# -- dataset generation -------------------------------------------------------


def test_generate_dataset_layout_and_manifest(tmp_path):
    spec = SyntheticSpec(duration=4.0, sample_rate=50.0, rng_seed=7)
    rows = generate_dataset(spec, 4, 1, 1, tmp_path / "d")
    assert len(rows) == 6
    manifest = read_manifest(tmp_path / "d")
    assert [r.split for r in manifest] == ["train"] * 4 + ["val"] + ["test"]
    assert [r.seed for r in manifest] == [7, 8, 9, 10, 11, 12]
    for r in manifest:
        assert os.path.isdir(tmp_path / "d" / r.split / r.id)


def test_generate_dataset_rerun_identical(tmp_path):
    spec = SyntheticSpec(duration=4.0, sample_rate=50.0, rng_seed=7)
    generate_dataset(spec, 2, 1, 1, tmp_path / "a")
    generate_dataset(spec, 2, 1, 1, tmp_path / "b")
    for rel in ("manifest.csv", "train/train_000/imu.csv", "test/test_000/gt.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_generate_dataset_empty_train_split(tmp_path):
    spec = SyntheticSpec(duration=4.0, sample_rate=50.0, rng_seed=1)
    rows = generate_dataset(spec, 0, 1, 1, tmp_path / "d")
    assert [r.split for r in rows] == ["val", "test"]


def test_generate_dataset_short_duration_rejected(tmp_path):
    spec = SyntheticSpec(duration=0.5, sample_rate=200.0)
    with pytest.raises(DataError, match="window"):
        generate_dataset(spec, 1, 1, 1, tmp_path / "d", window_seconds=1.0)
