"""Planar synthetic IMU motion with analytically known ground truth.

Heading and a speed driver are band-limited random Fourier series whose
amplitudes follow an Ornstein-Uhlenbeck spectrum with time constant
``heading_smoothness`` (0 degenerates to constant heading/speed). Velocity
is therefore smooth with closed-form derivatives:

    v(t) = s(t) * (cos(theta(t)), sin(theta(t)))
    a(t) = s'(t) * u(theta) + s(t) * theta'(t) * u_perp(theta)

Ideal signals: gyro z = theta'(t), gyro x/y = 0, accel x/y = a(t) in the
fixed world frame, accel z = g. Positions are the integral of v computed
per sample interval with Gauss-Legendre quadrature (exact at double
precision for these band-limited signals). Per-sequence constant biases
and white noise follow the given SyntheticSpec; the same seed reproduces
output bit for bit.
"""

import numpy as np

from .types import GroundTruthTrack, ImuSequence, SyntheticSpec

GRAVITY = 9.81
HEADING_STD = 0.8          # stationary heading std, rad
SPEED_DRIVER_STD = 1.0     # stationary std of the tanh driver
MAX_FREQ_HZ = 0.25         # band limit keeps jerk low at desk rates
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


class _FourierProcess:
    """sum_k a_k sin(2 pi f_k t) + b_k cos(2 pi f_k t), OU-shaped amplitudes."""

    def __init__(self, rng: np.random.Generator, duration: float, tau: float,
                 target_std: float):
        n_harmonics = max(1, int(np.floor(MAX_FREQ_HZ * duration)))
        k = np.arange(1, n_harmonics + 1)
        self.freqs = k / duration
        # per-harmonic variance from the OU power spectrum S(f) df
        spectrum = 2.0 * target_std ** 2 * tau / (1.0 + (2 * np.pi * self.freqs * tau) ** 2)
        amp_std = np.sqrt(spectrum / duration)
        self.a = rng.standard_normal(n_harmonics) * amp_std
        self.b = rng.standard_normal(n_harmonics) * amp_std

    def value(self, t: np.ndarray) -> np.ndarray:
        phase = 2 * np.pi * np.outer(t, self.freqs)
        return np.sin(phase) @ self.a + np.cos(phase) @ self.b

    def derivative(self, t: np.ndarray) -> np.ndarray:
        phase = 2 * np.pi * np.outer(t, self.freqs)
        w = 2 * np.pi * self.freqs
        return np.cos(phase) @ (w * self.a) - np.sin(phase) @ (w * self.b)


class _Motion:
    """Smooth planar motion: closed-form theta, speed, velocity, accel."""

    def __init__(self, spec: SyntheticSpec, rng: np.random.Generator):
        lo, hi = spec.speed_range
        self.mid = 0.5 * (lo + hi)
        self.amp = 0.5 * (hi - lo) * 0.98   # stay strictly inside the range
        self.theta0 = rng.uniform(-np.pi, np.pi)
        tau = spec.heading_smoothness
        self.heading = _FourierProcess(rng, spec.duration, tau, HEADING_STD)
        self.driver = _FourierProcess(rng, spec.duration, tau, SPEED_DRIVER_STD)

    def theta(self, t):
        return self.theta0 + self.heading.value(t)

    def turn_rate(self, t):
        return self.heading.derivative(t)

    def speed(self, t):
        return self.mid + self.amp * np.tanh(self.driver.value(t))

    def speed_rate(self, t):
        th = np.tanh(self.driver.value(t))
        return self.amp * (1.0 - th ** 2) * self.driver.derivative(t)

    def velocity(self, t):
        th = self.theta(t)
        return self.speed(t)[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)

    def accel(self, t):
        th = self.theta(t)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        u_perp = np.stack([-np.sin(th), np.cos(th)], axis=1)
        return (self.speed_rate(t)[:, None] * u
                + (self.speed(t) * self.turn_rate(t))[:, None] * u_perp)

    def positions(self, t_grid: np.ndarray) -> np.ndarray:
        """Cumulative integral of velocity over the sample grid."""
        h = np.diff(t_grid)
        mids = 0.5 * (t_grid[:-1] + t_grid[1:])
        # Gauss-Legendre nodes for every interval, evaluated in one batch
        nodes = mids[:, None] + 0.5 * h[:, None] * _GL_NODES[None, :]
        v = self.velocity(nodes.ravel()).reshape(len(h), len(_GL_NODES), 2)
        seg = 0.5 * h[:, None] * np.tensordot(v, _GL_WEIGHTS, axes=([1], [0]))
        out = np.zeros((len(t_grid), 2))
        np.cumsum(seg, axis=0, out=out[1:])
        return out


def synthesize(spec: SyntheticSpec,
               sequence_id: str = "synthetic") -> tuple[ImuSequence, GroundTruthTrack]:
    """Generate one synthetic sequence with exact planar ground truth."""
    rng = np.random.default_rng(spec.rng_seed)
    motion = _Motion(spec, rng)
    n = int(round(spec.duration * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate

    gyro = np.zeros((n, 3))
    gyro[:, 2] = motion.turn_rate(t)
    accel = np.zeros((n, 3))
    accel[:, :2] = motion.accel(t)
    accel[:, 2] = GRAVITY

    bias_gyro = rng.standard_normal(3) * spec.bias_std_gyro
    bias_accel = rng.standard_normal(3) * spec.bias_std_accel
    gyro = gyro + bias_gyro + rng.standard_normal((n, 3)) * spec.noise_std_gyro
    accel = accel + bias_accel + rng.standard_normal((n, 3)) * spec.noise_std_accel

    seq = ImuSequence(sequence_id=sequence_id, sample_rate=spec.sample_rate,
                      timestamps=t, gyro=gyro, accel=accel)
    gt = GroundTruthTrack(timestamps=t, positions=motion.positions(t),
                          velocities=motion.velocity(t))
    return seq, gt


def ideal_signals(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Noise- and bias-free (gyro, accel) for the same seed, for tests."""
    rng = np.random.default_rng(spec.rng_seed)
    motion = _Motion(spec, rng)
    n = int(round(spec.duration * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    gyro = np.zeros((n, 3))
    gyro[:, 2] = motion.turn_rate(t)
    accel = np.zeros((n, 3))
    accel[:, :2] = motion.accel(t)
    accel[:, 2] = GRAVITY
    return gyro, accel
