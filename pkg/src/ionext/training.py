"""Training: MSE objective, Adam, plateau-driven LR decay, early stop, and
the finite-difference gradient checker that anchors backward-pass correctness.
"""

import csv
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .nn.checkpoint import Checkpoint, OptimizerState, ScheduleState
from .nn.model import ModelConfig, build_model, tiny_config


class TrainError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimization protocol. window/stride describe how sequences are
    sliced into training windows."""

    batch_size: int = 64
    max_epochs: int = 100
    initial_lr: float = 1e-4
    lr_floor: float = 1e-6
    plateau_factor: float = 0.1
    plateau_patience: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    rng_seed: int = 0
    window_seconds: float = 1.0
    stride_seconds: float = 0.25

    def __post_init__(self):
        if self.batch_size < 1:
            raise TrainError("batch_size must be >= 1")
        if not 0 < self.plateau_factor < 1:
            raise TrainError("plateau_factor must be in (0, 1)")
        if not self.lr_floor < self.initial_lr:
            raise TrainError("lr_floor must be below initial_lr")
        if self.max_epochs < 1 or self.plateau_patience < 1:
            raise TrainError("max_epochs and plateau_patience must be >= 1")


def mse_loss(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean over the batch of squared Euclidean errors."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 2:
        raise TrainError(f"shape mismatch {predictions.shape} vs {labels.shape}")
    if predictions.shape[0] < 1:
        raise TrainError("empty batch")
    return float(np.mean(np.sum((predictions - labels) ** 2, axis=1)))


def mse_loss_grad(predictions: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mse_loss)/d(predictions)."""
    n = predictions.shape[0]
    return 2.0 * (predictions - labels) / n


class Adam:
    """Adam with bias correction; moments live alongside the parameters."""

    def __init__(self, named_params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(named_params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.m = OrderedDict((n, np.zeros_like(p.value)) for n, p in self.params)
        self.v = OrderedDict((n, np.zeros_like(p.value)) for n, p in self.params)

    def step(self, lr: float):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params:
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def load_state(self, state: OptimizerState):
        for name, _ in self.params:
            if name not in state.m or name not in state.v:
                raise TrainError(f"optimizer state missing moments for {name}")
            self.m[name][...] = state.m[name]
            self.v[name][...] = state.v[name]
        self.step_count = state.step

    def export_state(self) -> OptimizerState:
        return OptimizerState(
            m=OrderedDict((n, a.copy()) for n, a in self.m.items()),
            v=OrderedDict((n, a.copy()) for n, a in self.v.items()),
            step=self.step_count)


class PlateauSchedule:
    """Multiply lr by ``factor`` after ``patience`` epochs without
    validation improvement; signal stop once a reduction lands below
    ``floor``."""

    def __init__(self, initial_lr, factor, patience, floor):
        self.lr = initial_lr
        self.factor = factor
        self.patience = patience
        self.floor = floor
        self.best = math.inf
        self.since_improvement = 0

    def observe(self, val_loss: float) -> str:
        """Record an epoch's validation loss; returns continue|reduced|stop."""
        if val_loss < self.best:
            self.best = val_loss
            self.since_improvement = 0
            return "continue"
        self.since_improvement += 1
        if self.since_improvement < self.patience:
            return "continue"
        self.since_improvement = 0
        self.lr = self.lr * self.factor
        return "stop" if self.lr < self.floor else "reduced"

    def export_state(self) -> ScheduleState:
        return ScheduleState(lr=self.lr, best_val_mse=self.best,
                             epochs_since_improvement=self.since_improvement)

    def load_state(self, state: ScheduleState):
        self.lr = state.lr
        self.best = state.best_val_mse
        self.since_improvement = state.epochs_since_improvement


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    lr: float


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list
    stop_reason: str          # max_epochs | lr_floor | nan_abort
    diagnostics: dict = field(default_factory=dict)


def _batched_val_mse(model, x, y, batch_size) -> float:
    total = 0.0
    for i in range(0, len(x), batch_size):
        xb, yb = x[i:i + batch_size], y[i:i + batch_size]
        pred = model.forward(xb, training=False)
        total += np.sum(np.sum((pred - yb) ** 2, axis=1))
    return float(total / len(x))


REFRESH_CAP = 4096  # windows used to recalibrate norm statistics per epoch


def refresh_norm_stats(model, x, batch_size):
    """Recompute batch-norm running statistics under the current parameters.

    Adam moves parameters far faster than the EMA statistics track, and the
    train/eval gap compounds across stacked norm layers; recalibrating with
    a cumulative average (the update_bn recipe) keeps inference faithful.
    No-op for layer-norm models.
    """
    from .nn.layers import BatchNorm

    norms = [m for m in model.modules() if isinstance(m, BatchNorm)]
    if not norms:
        return
    for bn in norms:
        bn.begin_stat_refresh()
    try:
        for i in range(0, min(len(x), REFRESH_CAP), batch_size):
            model.forward(x[i:i + batch_size], training=True)
    finally:
        for bn in norms:
            bn.end_stat_refresh()


def train(model, train_set, val_set, config: TrainConfig,
          metadata: dict | None = None,
          resume: Checkpoint | None = None) -> TrainResult:
    """Minibatch Adam with seeded shuffling and plateau LR decay.

    ``train_set``/``val_set`` are (X, Y) arrays of shape (N,6,T)/(N,2).
    Returns the best-validation checkpoint (parameters, optimizer and
    schedule state snapshotted at that epoch) plus per-epoch history.
    """
    x_train, y_train = train_set
    x_val, y_val = val_set
    if len(x_train) == 0 or len(x_val) == 0:
        raise TrainError("train and validation sets must be non-empty")

    adam = Adam(model.named_parameters(), config.adam_beta1,
                config.adam_beta2, config.adam_epsilon)
    sched = PlateauSchedule(config.initial_lr, config.plateau_factor,
                            config.plateau_patience, config.lr_floor)
    start_epoch = 0
    if resume is not None:
        if resume.optimizer is None:
            raise TrainError("checkpoint has no optimizer state; cannot resume")
        model.load_state(resume.params, resume.buffers)
        adam.load_state(resume.optimizer)
        if resume.schedule is not None:
            sched.load_state(resume.schedule)
        start_epoch = int(resume.metadata.get("epoch", 0))

    meta = dict(metadata or {})
    meta.setdefault("rng_seed", config.rng_seed)

    history: list[EpochStats] = []
    best = None  # (val_mse, params, buffers, opt_state, sched_state, epoch)
    stop_reason = "max_epochs"
    diagnostics = {}

    def snapshot(val_mse, epoch):
        params = OrderedDict((n, p.value.copy()) for n, p in model.named_parameters())
        buffers = OrderedDict((n, b.copy()) for n, b in model.named_buffers())
        return (val_mse, params, buffers, adam.export_state(),
                sched.export_state(), epoch)

    n_train = len(x_train)
    aborted = False
    for epoch in range(start_epoch + 1, config.max_epochs + 1):
        lr_epoch = sched.lr
        order = np.random.default_rng([config.rng_seed, epoch]).permutation(n_train)
        loss_sum = 0.0
        for bi, i in enumerate(range(0, n_train, config.batch_size)):
            idx = order[i:i + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            pred = model.forward(xb, training=True)
            loss = mse_loss(pred, yb)
            if not math.isfinite(loss):
                stop_reason = "nan_abort"
                diagnostics = {"epoch": epoch, "batch_index": bi, "loss": loss}
                aborted = True
                break
            loss_sum += loss * len(idx)
            model.zero_grads()
            model.backward(mse_loss_grad(pred, yb))
            adam.step(lr_epoch)
        if aborted:
            break
        train_mse = loss_sum / n_train
        refresh_norm_stats(model, x_train[order[:REFRESH_CAP]], config.batch_size)
        val_mse = _batched_val_mse(model, x_val, y_val, config.batch_size)
        history.append(EpochStats(epoch, train_mse, val_mse, lr_epoch))
        if best is None or val_mse < best[0]:
            best = snapshot(val_mse, epoch)
        if sched.observe(val_mse) == "stop":
            stop_reason = "lr_floor"
            break

    if best is None:  # aborted before any full epoch
        best = snapshot(math.inf, start_epoch)

    val_best, params, buffers, opt_state, sched_state, best_epoch = best
    meta.update({"epoch": best_epoch, "best_val_mse": val_best,
                 "stop_reason": stop_reason})
    ckpt = Checkpoint(config=model.config, params=params, buffers=buffers,
                      optimizer=opt_state, schedule=sched_state, metadata=meta)
    return TrainResult(checkpoint=ckpt, history=history,
                       stop_reason=stop_reason, diagnostics=diagnostics)


def write_history(path, history: list):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse", "lr"])
        for h in history:
            writer.writerow([h.epoch, repr(h.train_mse), repr(h.val_mse),
                             repr(h.lr)])


# ---------------------------------------------------------------------------
# finite-difference gradient checking


@dataclass
class GradcheckReport:
    max_rel_err: float
    worst_param: str
    n_checked: int
    tolerance: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"gradcheck {status}: max relative error {self.max_rel_err:.3e} "
                f"over {self.n_checked} parameters (tolerance {self.tolerance:g}, "
                f"worst: {self.worst_param})")


def gradcheck(config: ModelConfig | None = None, tolerance: float = 1e-4,
              seed: int = 0, n_samples: int = 200, batch: int = 4,
              t_len: int = 32, h: float = 1e-5) -> GradcheckReport:
    """Central finite differences vs. the analytic backward pass.

    Runs in double precision on a tiny model. Checks >= ``n_samples``
    randomly sampled parameter entries plus every entry of one mixer and
    one gating unit. Relative error uses max(|a|, |fd|, 1e-8) as the
    denominator.
    """
    config = config or tiny_config()
    model = build_model(config, init_seed=seed, dtype=np.float64)
    n_params = sum(p.value.size for _, p in model.named_parameters())
    if n_params > 5e4:
        raise TrainError(f"gradcheck requires <= 5e4 parameters, got {n_params}")

    rng = np.random.default_rng(seed + 1)
    # The production init leaves the residual branches near zero, which makes
    # early-layer gradients so small that h=1e-5 central differences sit at
    # the float64 cancellation floor. Checking at a generic random point in
    # parameter space keeps every gradient well scaled; correctness of the
    # backward pass is point-independent.
    for name, p in model.named_parameters():
        if name.endswith(".scale"):
            p.value[...] = 1.0 + 0.3 * rng.standard_normal(p.value.shape)
        else:
            p.value[...] = 0.4 * rng.standard_normal(p.value.shape)
    x = rng.standard_normal((batch, 6, t_len))
    y = rng.standard_normal((batch, config.output_dim))

    def loss_fn() -> float:
        return mse_loss(model.forward(x, training=True), y)

    pred = model.forward(x, training=True)
    model.zero_grads()
    model.backward(mse_loss_grad(pred, y))
    params = list(model.named_parameters())
    analytic = {name: p.grad.copy() for name, p in params}

    # all entries of one mixer and one gating unit, then random samples
    targets = []
    for name, p in params:
        if ".block1.dadm." in name or ".block1.stgu." in name:
            if name.startswith("stage1."):
                targets.extend((name, i) for i in range(p.value.size))
    sizes = np.array([p.value.size for _, p in params])
    cum = np.cumsum(sizes)
    for flat in rng.integers(0, cum[-1], size=n_samples):
        pi = int(np.searchsorted(cum, flat, side="right"))
        offset = int(flat - (cum[pi - 1] if pi else 0))
        targets.append((params[pi][0], offset))

    by_name = dict(params)
    max_rel = 0.0
    worst = ""
    seen = set()
    for name, offset in targets:
        if (name, offset) in seen:
            continue
        seen.add((name, offset))
        value = by_name[name].value.reshape(-1)
        orig = value[offset]
        value[offset] = orig + h
        up = loss_fn()
        value[offset] = orig - h
        down = loss_fn()
        value[offset] = orig
        fd = (up - down) / (2 * h)
        an = analytic[name].reshape(-1)[offset]
        rel = abs(an - fd) / max(abs(an), abs(fd), 1e-8)
        if rel > max_rel:
            max_rel = rel
            worst = f"{name}[{offset}]"
    return GradcheckReport(max_rel_err=max_rel, worst_param=worst,
                           n_checked=len(seen), tolerance=tolerance,
                           passed=max_rel < tolerance)
