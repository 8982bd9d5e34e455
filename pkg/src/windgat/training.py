"""Loss, Adam optimizer, and the mini-batch training loop with early stopping.

The loop trains on normalized targets with MSE, keeps the best-validation
parameter snapshot, and writes one JSON line per epoch. A ``clock`` callable
can be injected so tests get reproducible ``seconds`` fields.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .data import WeatherInstance
from .errors import ConfigError, NumericError, ShapeError
from .model import MultistreamGatModel
from .tensor import Tensor, no_grad


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 10
    seed: int = 0
    clip_norm: float | None = 5.0  # None disables global-norm clipping

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ConfigError("adam betas must lie in [0, 1)")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive or None, got {self.clip_norm}")


def mse_loss(pred: Tensor, target) -> Tensor:
    """Mean squared error over every (instance, city) entry; differentiable."""
    target = target if isinstance(target, Tensor) else Tensor(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shapes differ: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return (diff * diff).mean()


class AdamOptimizer:
    """Adam with bias correction over the model's named parameters."""

    def __init__(self, params: Sequence[tuple[str, Tensor]], config: TrainConfig):
        self.params = list(params)
        self.config = config
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.data) for _, p in self.params]
        self.second_moment = [np.zeros_like(p.data) for _, p in self.params]

    def _gradients(self) -> list[np.ndarray]:
        grads = []
        for name, param in self.params:
            g = param.grad if param.grad is not None else np.zeros_like(param.data)
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter {name!r}")
            grads.append(g)
        return grads

    def step(self) -> None:
        """Apply one update from the gradients currently stored on the parameters."""
        grads = self._gradients()
        if self.config.clip_norm is not None:
            total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if total > self.config.clip_norm:
                scale = self.config.clip_norm / total
                grads = [g * scale for g in grads]
        self.step_count += 1
        c = self.config
        bias1 = 1.0 - c.beta1**self.step_count
        bias2 = 1.0 - c.beta2**self.step_count
        for i, (_, param) in enumerate(self.params):
            g = grads[i]
            self.first_moment[i] = c.beta1 * self.first_moment[i] + (1 - c.beta1) * g
            self.second_moment[i] = c.beta2 * self.second_moment[i] + (1 - c.beta2) * g * g
            m_hat = self.first_moment[i] / bias1
            v_hat = self.second_moment[i] / bias2
            param.data -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


@dataclass
class TrainingResult:
    log: list[dict]
    best_val_mse: float
    best_epoch: int
    epochs_run: int
    diverged: bool = False


def _batch_targets(batch: Sequence[WeatherInstance]) -> Tensor:
    return Tensor(np.stack([inst.y for inst in batch], axis=0))


def _batch_forward(model: MultistreamGatModel, batch: Sequence[WeatherInstance]) -> Tensor:
    rows = []
    for inst in batch:
        pred, _ = model.forward(Tensor(inst.x))
        rows.append(pred.reshape((1, len(inst.y))))
    return T.concat(rows, axis=0)


def evaluate_mse(model: MultistreamGatModel, instances: Sequence[WeatherInstance]) -> float:
    """Dataset MSE on the normalized scale, without building a graph."""
    if not instances:
        raise ConfigError("cannot evaluate on an empty instance list")
    total = 0.0
    with no_grad():
        for inst in instances:
            pred, _ = model.forward(Tensor(inst.x))
            total += float(np.sum((pred.data - inst.y) ** 2))
    return total / (len(instances) * len(instances[0].y))


def _snapshot(model: MultistreamGatModel) -> dict[str, np.ndarray]:
    return {name: param.data.copy() for name, param in model.parameter_items()}


def _restore(model: MultistreamGatModel, snapshot: dict[str, np.ndarray]) -> None:
    for name, param in model.parameter_items():
        param.data[...] = snapshot[name]


def fit(
    model: MultistreamGatModel,
    train_instances: Sequence[WeatherInstance],
    val_instances: Sequence[WeatherInstance],
    config: TrainConfig,
    log_path=None,
    clock: Callable[[], float] | None = None,
) -> TrainingResult:
    """Train with shuffled mini-batches; restore the best-validation snapshot.

    Stops once validation MSE has not improved for ``config.patience``
    consecutive epochs. If the loss turns non-finite the last good snapshot
    stays in the model and the result is flagged ``diverged``.
    """
    if not train_instances or not val_instances:
        raise ConfigError("fit requires non-empty train and val splits")
    clock = clock if clock is not None else time.perf_counter
    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(model.parameter_items(), config)
    best = _snapshot(model)
    best_val = math.inf
    best_epoch = 0
    stale = 0
    log: list[dict] = []
    diverged = False
    started = clock()
    log_file = open(log_path, "w") if log_path is not None else None
    try:
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(train_instances))
            train_sq_sum = 0.0
            try:
                for lo in range(0, len(order), config.batch_size):
                    batch = [train_instances[i] for i in order[lo : lo + config.batch_size]]
                    pred = _batch_forward(model, batch)
                    loss = mse_loss(pred, _batch_targets(batch))
                    loss.backward()
                    optimizer.step()
                    train_sq_sum += loss.item() * len(batch)
                val_mse = evaluate_mse(model, val_instances)
                train_mse = train_sq_sum / len(train_instances)
                if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
                    raise NumericError("loss became non-finite")
            except NumericError:
                diverged = True
                break
            entry = {
                "epoch": epoch,
                "train_mse": train_mse,
                "val_mse": val_mse,
                "seconds": clock() - started,
            }
            log.append(entry)
            if log_file is not None:
                log_file.write(json.dumps(entry, sort_keys=True) + "\n")
                log_file.flush()
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch
                best = _snapshot(model)
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    finally:
        if log_file is not None:
            log_file.close()
    _restore(model, best)
    return TrainingResult(
        log=log,
        best_val_mse=best_val,
        best_epoch=best_epoch,
        epochs_run=len(log),
        diverged=diverged,
    )
