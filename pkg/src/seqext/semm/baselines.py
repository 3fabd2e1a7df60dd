"""Regression baselines: a 5-layer fully connected net and a direct-prediction GRU.

Both are trained by mean squared error, i.e. as Gaussian regressions with a
fixed noise level. ``predict`` returns their point forecasts; ``simulate``
samples from the implied Gaussian (forecast plus residual noise estimated on
the training set), which is what makes their outputs comparable with sampled
mixture-model extensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..seqcore import PointSequence, SeqError, as_rng, gaps as _gaps
from .model import gru_init, gru_step, GruWeights
from .train import Adam

__all__ = ["BaselineConfig", "FcnnBaseline", "GruDirectBaseline"]


@dataclass(frozen=True)
class BaselineConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    grad_clip: float = 5.0
    seed: int = 0


def _points(s) -> np.ndarray:
    return s.points if isinstance(s, PointSequence) else np.asarray(s, dtype=float)


class FcnnBaseline:
    """Maps the first ``n_in`` terms of a sequence to the next ``n_out`` terms.

    Inputs are positions relative to the first observed point scaled by
    ``1/n_in`` (centred); outputs are offsets from the last observed point
    scaled by ``1/n_out``. Four tanh hidden layers of width ``width``.
    """

    def __init__(self, n_in: int = 500, n_out: int = 500, width: int = 512, seed=0,
                 init: str = "uniform"):
        self.n_in, self.n_out, self.width = int(n_in), int(n_out), int(width)
        rng = as_rng(seed)
        self.params = ad.ParamStore()
        sizes = [self.n_in] + [self.width] * 4 + [self.n_out]
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            if init == "zeros":
                w = np.zeros((a, b))
            else:
                w = rng.uniform(-1 / math.sqrt(a), 1 / math.sqrt(a), (a, b))
            self.params.add(f"fc{i}.w", w)
            self.params.add(f"fc{i}.b", np.zeros(b))
        self.n_layers = len(sizes) - 1
        self.residual_sd = np.ones(self.n_out)

    def _features(self, obs: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(obs)
        if obs.shape[1] != self.n_in:
            raise SeqError(f"window width mismatch: expected {self.n_in} observed terms, got {obs.shape[1]}")
        return (obs - obs[:, :1]) / self.n_in - 0.5

    def forward(self, x) -> ad.Tensor:
        h = ad.tensor(x)
        for i in range(self.n_layers):
            h = ad.add(ad.matmul(h, self.params[f"fc{i}.w"]), self.params[f"fc{i}.b"])
            if i < self.n_layers - 1:
                h = ad.tanh(h)
        return h

    def _split(self, seqs):
        obs, fut = [], []
        for s in seqs:
            p = _points(s)
            if p.size < self.n_in + self.n_out:
                raise SeqError(f"sequence of {p.size} points is shorter than n_in + n_out")
            obs.append(p[:self.n_in])
            fut.append(p[self.n_in:self.n_in + self.n_out])
        return np.array(obs), np.array(fut)

    def fit(self, seqs, cfg: BaselineConfig = BaselineConfig()) -> list[float]:
        obs, fut = self._split(seqs)
        X = self._features(obs)
        Y = (fut - obs[:, -1:]) / self.n_out
        opt = Adam(self.params, cfg.learning_rate, clip=cfg.grad_clip)
        rng = as_rng(cfg.seed)
        history = []
        for _ in range(cfg.epochs):
            order = rng.permutation(len(X))
            for b in range(0, len(order), cfg.batch_size):
                idx = order[b:b + cfg.batch_size]
                self.params.zero_grad()
                with ad.Tape() as tape:
                    loss = ad.mean(ad.square(ad.sub(self.forward(X[idx]), Y[idx])))
                tape.backward(loss)
                opt.step()
            history.append(self.mse(X, Y))
        resid = (self.predict(obs) - fut)
        self.residual_sd = np.sqrt(np.mean(resid ** 2, axis=0))
        return history

    def mse(self, X, Y) -> float:
        with ad.no_tape():
            return float(np.mean((self.forward(X).data - Y) ** 2))

    def predict(self, obs) -> np.ndarray:
        """Point forecast of the next ``n_out`` positions for each observed window."""
        obs = np.atleast_2d([_points(o) for o in obs] if not isinstance(obs, np.ndarray) else obs)
        with ad.no_tape():
            out = self.forward(self._features(obs)).data
        return obs[:, -1:] + out * self.n_out

    def simulate(self, obs, seed) -> np.ndarray:
        rng = as_rng(seed)
        mean = self.predict(obs)
        return mean + rng.standard_normal(mean.shape) * self.residual_sd


class GruDirectBaseline:
    """GRU encoder with a linear head regressing the next gap.

    Gaps are standardized (not log-transformed, since fed-back forecasts may
    be non-positive) and the context before step ``i`` predicts gap ``i``.
    """

    def __init__(self, hidden_size: int = 64, seed=0):
        self.H = int(hidden_size)
        rng = as_rng(seed)
        self.params = ad.ParamStore()
        self.gru: GruWeights = gru_init(self.params, "gru0", 1, self.H, rng)
        bound = 1 / math.sqrt(self.H)
        self.params.add("head.w", rng.uniform(-bound, bound, (self.H, 1)))
        self.params.add("head.b", np.zeros(1))
        self.mean, self.std = 0.0, 1.0
        self.residual_sd = 1.0

    def _head(self, h):
        return ad.add(ad.matmul(h, self.params["head.w"]), self.params["head.b"])

    def _run(self, feats: np.ndarray) -> ad.Tensor:
        B, T = feats.shape
        h = ad.Tensor(np.zeros((B, self.H)))
        outs = []
        for t in range(T):
            outs.append(self._head(h))
            h = gru_step(self.gru, feats[:, t:t + 1], h)
        return ad.reshape(ad.concat(outs, axis=1), (B, T))

    def fit(self, seqs, cfg: BaselineConfig = BaselineConfig()) -> list[float]:
        g = [_gaps(s).gaps if isinstance(s, PointSequence) else np.asarray(s, float) for s in seqs]
        T = min(x.size for x in g)
        G = np.array([x[:T] for x in g])
        self.mean = float(G.mean())
        sd = float(G.std())
        self.std = sd if sd > 1e-12 else 1.0
        F = (G - self.mean) / self.std
        opt = Adam(self.params, cfg.learning_rate, clip=cfg.grad_clip)
        rng = as_rng(cfg.seed)
        history = []
        for _ in range(cfg.epochs):
            order = rng.permutation(len(F))
            total = 0.0
            for b in range(0, len(order), cfg.batch_size):
                idx = order[b:b + cfg.batch_size]
                self.params.zero_grad()
                with ad.Tape() as tape:
                    loss = ad.mean(ad.square(ad.sub(self._run(F[idx]), F[idx])))
                tape.backward(loss)
                opt.step()
                total += float(loss.data) * len(idx)
            history.append(total / len(F))
        with ad.no_tape():
            pred = self._run(F).data * self.std + self.mean
        self.residual_sd = float(np.sqrt(np.mean((pred - G) ** 2)))
        return history

    def _rollout(self, seqs, n_new: int, noise) -> np.ndarray:
        g = [_gaps(s).gaps if isinstance(s, PointSequence) else np.asarray(s, float) for s in seqs]
        out = np.empty((len(g), n_new))
        with ad.no_tape():
            for i, x in enumerate(g):
                h = ad.Tensor(np.zeros((1, self.H)))
                for v in (x - self.mean) / self.std:
                    h = gru_step(self.gru, np.array([[v]]), h)
                for t in range(n_new):
                    y = float(self._head(h).data[0, 0]) * self.std + self.mean + noise(i)
                    out[i, t] = y
                    h = gru_step(self.gru, np.array([[(y - self.mean) / self.std]]), h)
        return out

    def predict(self, seqs, n_new: int) -> np.ndarray:
        """Deterministic forecast: predicted gaps fed back as inputs, shape (B, n_new)."""
        return self._rollout(seqs, n_new, lambda i: 0.0)

    def simulate(self, seqs, n_new: int, seed) -> np.ndarray:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
        rngs = [np.random.default_rng(c) for c in ss.spawn(len(seqs))]
        return self._rollout(seqs, n_new, lambda i: self.residual_sd * rngs[i].standard_normal())
