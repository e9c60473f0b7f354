"""SGD training loop with per-epoch decay and dev-driven lr halving-by-5.

Per epoch: shuffle the training split deterministically from seed+epoch,
apply SGD updates at the current learning rate, evaluate dev accuracy,
then multiply the rate by the decay factor and additionally divide it by
divide_on_decline when dev accuracy strictly decreased versus the previous
evaluation. Training stops when the rate falls below the floor or the
epoch bound is reached; the parameters from the best dev epoch are
returned.

The dev accuracy of the untrained model is evaluated once before epoch 1
and serves as the first comparison reference, so a first-epoch decline
already triggers a division. With every epoch declining, the rate after
epoch e is lr0 * (decay / divide_on_decline)^e and drops below the 1e-5
floor at epoch 6.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParameters, NumericalError, loss_and_gradients, predict
from .text import tokenize


@dataclass
class TrainConfig:
    lr0: float = 0.1
    decay: float = 0.99
    divide_on_decline: float = 5.0
    lr_floor: float = 1e-5
    max_epochs: int = 20
    batch_size: int = 64
    seed: int = 0
    compare_to: str = "previous"  # or "best": decline relative to best-so-far

    def __post_init__(self):
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        if self.divide_on_decline <= 1.0:
            raise ValueError("divide_on_decline must be > 1")
        if self.lr_floor <= 0.0:
            raise ValueError("lr_floor must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.compare_to not in ("previous", "best"):
            raise ValueError("compare_to must be 'previous' or 'best'")


@dataclass
class TrainState:
    epoch: int = 0
    lr: float = 0.0
    baseline_dev_acc: float = 0.0
    best_dev_acc: float = float("-inf")
    last_dev_acc: float = 0.0
    history: list[tuple[int, float, float, float]] = field(default_factory=list)
    best_params: ModelParameters | None = None
    stop_reason: str = ""

    def log_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "lr", "train_loss", "dev_acc"])
        for epoch, lr, loss, acc in self.history:
            writer.writerow([epoch, f"{lr:.10g}", f"{loss:.8f}", f"{acc:.6f}"])
        return buf.getvalue()


class TrainAbort(RuntimeError):
    """Training hit a non-finite loss; .state carries the trace so far."""

    def __init__(self, message: str, state: TrainState):
        super().__init__(message)
        self.state = state


def sgd_step(params: ModelParameters, gradients: dict[str, np.ndarray],
             lr: float) -> ModelParameters:
    """In-place update: params <- params - lr * gradients, elementwise."""
    if lr <= 0.0:
        raise ValueError("lr must be positive")
    for name, grad in gradients.items():
        arr = params.array(name)
        if arr.shape != grad.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}: "
                             f"{grad.shape} vs {arr.shape}")
        arr -= lr * grad
    return params


def _default_dev_eval(dev_tokens, dev_labels):
    def evaluate(params: ModelParameters) -> float:
        hits = sum(1 for toks, lab in zip(dev_tokens, dev_labels)
                   if predict(toks, params).label == lab)
        return 100.0 * hits / len(dev_labels)
    return evaluate


def fit(train, dev, params: ModelParameters, config: TrainConfig,
        tokenizer=tokenize, dev_eval=None):
    """Train params on the train split, stopping per the schedule.

    dev_eval, when given, must be a callable(params) -> accuracy; it
    exists so tests can script dev accuracies. Returns (best_params,
    state); the best parameters are the snapshot from the epoch with the
    highest dev accuracy (ties keep the earliest epoch).
    """
    if not train or not dev:
        raise ValueError("train and dev splits must both be nonempty")
    tok_train = [(tokenizer(inst.hypothesis), inst.label) for inst in train]
    if dev_eval is None:
        dev_eval = _default_dev_eval([tokenizer(inst.hypothesis) for inst in dev],
                                     [inst.label for inst in dev])

    state = TrainState()
    state.lr = config.lr0
    state.baseline_dev_acc = dev_eval(params)
    state.last_dev_acc = state.baseline_dev_acc
    reference = state.baseline_dev_acc
    n = len(tok_train)

    for epoch in range(1, config.max_epochs + 1):
        order = np.random.default_rng(config.seed + epoch).permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = [tok_train[i] for i in order[start:start + config.batch_size]]
            try:
                loss, grads = loss_and_gradients(batch, params)
            except NumericalError as exc:
                state.stop_reason = "non-finite-loss"
                raise TrainAbort(f"epoch {epoch}: {exc}", state) from exc
            sgd_step(params, grads, state.lr)
            loss_sum += loss * len(batch)
        train_loss = loss_sum / n
        dev_acc = dev_eval(params)
        state.epoch = epoch
        state.history.append((epoch, state.lr, train_loss, dev_acc))
        if dev_acc > state.best_dev_acc:
            state.best_dev_acc = dev_acc
            state.best_params = params.clone()
        state.lr *= config.decay
        if dev_acc < reference:
            state.lr /= config.divide_on_decline
        reference = dev_acc if config.compare_to == "previous" else state.best_dev_acc
        state.last_dev_acc = dev_acc
        if state.lr < config.lr_floor:
            state.stop_reason = "lr_floor"
            break
    else:
        state.stop_reason = "max_epochs"
    return state.best_params, state
