"""Mini-batch Adam training with best-validation checkpointing."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .. import autodiff as ad
from ..seqcore import GapSeries, PointSequence, SeqError, as_rng, gaps as _gaps
from .model import SemmModel, nll

log = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainResult", "TrainingDiverged", "Adam", "split_indices", "train"]


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    seed: int = 0
    split: tuple = (0.7, 0.15, 0.15)
    lr_schedule: str = "constant"  # or "cosine": anneal to zero over the run

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise SeqError("epochs and batch_size must be >= 1")
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9 or min(self.split) < 0:
            raise SeqError("split fractions must be three non-negative numbers summing to 1")
        if self.lr_schedule not in ("constant", "cosine"):
            raise SeqError(f"unknown lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split"] = list(self.split)
        return d


class Adam:
    """Adam with global gradient-norm clipping, acting on a ParamStore in place."""

    def __init__(self, params: ad.ParamStore, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 clip: float | None = 5.0):
        self.params = params
        self.lr, self.b1, self.b2, self.eps, self.clip = lr, beta1, beta2, eps, clip
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.t = 0

    def step(self) -> float:
        grads = {k: self.params.grad(k) for k in self.params}
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        factor = 1.0
        if self.clip is not None and norm > self.clip:
            factor = self.clip / norm
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, t in self.params.items():
            g = grads[k] * factor
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            t.data = t.data - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return norm


def split_indices(n: int, fractions, seed) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shuffle ``range(n)`` and cut it into train/validation/test index arrays."""
    perm = as_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_train = max(1, min(n_train, n))
    n_val = min(n_val, n - n_train)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass
class TrainResult:
    model: SemmModel
    history: list = field(default_factory=list)  # dicts: epoch, train_loss, val_loss
    best_epoch: int = 0
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None


def _as_gaps(s) -> np.ndarray:
    if isinstance(s, PointSequence):
        return _gaps(s).gaps
    if isinstance(s, GapSeries):
        return s.gaps
    return np.asarray(s, dtype=float)


def _eval_loss(model, data, batch_size) -> float:
    total, count = 0.0, 0
    with ad.no_tape():
        for i in range(0, len(data), batch_size):
            chunk = data[i:i + batch_size]
            n = sum(g.size for g in chunk)
            total += float(nll(model, chunk).data) * n
            count += n
    return total / count


def train(model: SemmModel, data, cfg: TrainConfig,
          on_epoch: Callable[[int, SemmModel], None] | None = None,
          fit_transform: bool = True) -> TrainResult:
    """Fit ``model`` to sequences by minimizing the mean gap NLL.

    The data is split per ``cfg.split``; the returned model is a copy of the
    parameters at the epoch with the lowest validation loss (training loss
    when the validation split is empty). ``on_epoch(epoch, model)`` runs
    after every epoch with the live model.
    """
    if len(data) < 1:
        raise SeqError("train needs at least one sequence")
    all_gaps = [_as_gaps(s) for s in data]
    tr, va, te = split_indices(len(all_gaps), cfg.split, cfg.seed)
    train_set = [all_gaps[i] for i in tr]
    val_set = [all_gaps[i] for i in va]
    if fit_transform:
        model.fit_transform(train_set)
    opt = Adam(model.params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
               cfg.adam_eps, cfg.grad_clip)
    rng = as_rng(cfg.seed + 1)
    result = TrainResult(model, [], 0, tr, va, te)
    best = math.inf
    best_state = model.params.state()
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        if cfg.lr_schedule == "cosine":
            opt.lr = cfg.learning_rate * 0.5 * (1 + math.cos(math.pi * (epoch - 1) / cfg.epochs))
        order = rng.permutation(len(train_set))
        losses, weights = [], []
        for b in range(0, len(order), cfg.batch_size):
            batch = [train_set[i] for i in order[b:b + cfg.batch_size]]
            model.params.zero_grad()
            with ad.Tape() as tape:
                loss = nll(model, batch)
            value = float(loss.data)
            step += 1
            if not math.isfinite(value):
                raise TrainingDiverged(f"non-finite loss {value} at epoch {epoch}, step {step}")
            tape.backward(loss)
            opt.step()
            losses.append(value)
            weights.append(sum(g.size for g in batch))
        train_loss = float(np.average(losses, weights=weights))
        val_loss = _eval_loss(model, val_set, cfg.batch_size) if val_set else train_loss
        result.history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if val_loss < best:
            best = val_loss
            best_state = model.params.state()
            result.best_epoch = epoch
        if on_epoch is not None:
            on_epoch(epoch, model)
    final = model.copy()
    final.params.load(best_state)
    result.model = final
    return result
