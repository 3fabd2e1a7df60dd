"""GRU encoder plus affine mixture heads.

Gaps enter the recurrence as standardized log-gaps. The context used to
predict gap ``i`` is the top-layer state after consuming gaps ``1..i-1``
(the zero state for the first gap); each context is mapped affinely to
mixture logits, log-space means and log-space scales.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..seqcore import GapSeries, PointSequence, SeqError, as_rng, gaps as _gaps
from .mixture import MixtureParams, mixture_logpdf_tensor

__all__ = ["SemmModel", "GruWeights", "MixtureHeads", "gru_step", "gru_init", "encode",
           "encode_features", "heads_forward", "heads_tensors", "nll", "gap_features"]

GATES = ("R1", "R2", "Z1", "Z2", "N1", "N2")
BIASES = ("b_ir", "b_hr", "b_iz", "b_hz", "b_in", "b_hn")


@dataclass
class GruWeights:
    """View of one GRU layer's tensors inside a ParamStore.

    Matrices are stored input-major (``in x H``) so a batch of row vectors
    multiplies on the left.
    """

    R1: ad.Tensor
    R2: ad.Tensor
    Z1: ad.Tensor
    Z2: ad.Tensor
    N1: ad.Tensor
    N2: ad.Tensor
    b_ir: ad.Tensor
    b_hr: ad.Tensor
    b_iz: ad.Tensor
    b_hz: ad.Tensor
    b_in: ad.Tensor
    b_hn: ad.Tensor

    @property
    def hidden_size(self) -> int:
        return self.R2.shape[0]

    @property
    def input_size(self) -> int:
        return self.R1.shape[0]

    @classmethod
    def from_store(cls, store: ad.ParamStore, prefix: str) -> "GruWeights":
        return cls(**{k: store[f"{prefix}.{k}"] for k in GATES + BIASES})


@dataclass
class MixtureHeads:
    M_w: ad.Tensor
    M_b: ad.Tensor
    S_w: ad.Tensor
    S_b: ad.Tensor
    W_w: ad.Tensor
    W_b: ad.Tensor

    @classmethod
    def from_store(cls, store: ad.ParamStore, prefix: str = "head") -> "MixtureHeads":
        return cls(**{k: store[f"{prefix}.{k}"] for k in ("M_w", "M_b", "S_w", "S_b", "W_w", "W_b")})


def gru_init(store: ad.ParamStore, prefix: str, input_size: int, hidden: int,
             rng: np.random.Generator) -> GruWeights:
    bound = 1.0 / math.sqrt(hidden)
    for k in GATES:
        rows = input_size if k.endswith("1") else hidden
        store.add(f"{prefix}.{k}", rng.uniform(-bound, bound, (rows, hidden)))
    for k in BIASES:
        store.add(f"{prefix}.{k}", rng.uniform(-bound, bound, hidden))
    return GruWeights.from_store(store, prefix)


def gru_step(w: GruWeights, a, h_prev) -> ad.Tensor:
    """One GRU update for a batch: ``a`` is (B, in), ``h_prev`` is (B, H)."""
    a, h_prev = ad.tensor(a), ad.tensor(h_prev)
    if a.data.ndim != 2 or a.shape[1] != w.input_size:
        raise ad.ShapeError(f"gru_step: input shape {a.shape} does not match input size {w.input_size}")
    if h_prev.shape != (a.shape[0], w.hidden_size):
        raise ad.ShapeError(f"gru_step: hidden shape {h_prev.shape}, expected {(a.shape[0], w.hidden_size)}")
    r = ad.sigmoid(ad.add(ad.add(ad.matmul(a, w.R1), w.b_ir), ad.add(ad.matmul(h_prev, w.R2), w.b_hr)))
    z = ad.sigmoid(ad.add(ad.add(ad.matmul(a, w.Z1), w.b_iz), ad.add(ad.matmul(h_prev, w.Z2), w.b_hz)))
    n = ad.tanh(ad.add(ad.add(ad.matmul(a, w.N1), w.b_in),
                       ad.mul(r, ad.add(ad.matmul(h_prev, w.N2), w.b_hn))))
    # (1 - z) * n + z * h_prev
    return ad.add(n, ad.mul(z, ad.sub(h_prev, n)))


class SemmModel:
    """Multi-layer GRU encoder with log-normal mixture heads.

    Parameters live in ``self.params``; ``feat_mean`` / ``feat_std`` are the
    log-gap standardization constants (set from training data by
    :meth:`fit_transform`).
    """

    def __init__(self, hidden_size: int = 64, n_components: int = 32, n_layers: int = 1,
                 seed=0, sigma_floor: float = 1e-4):
        if hidden_size < 1 or n_components < 1 or n_layers < 1:
            raise SeqError("hidden_size, n_components and n_layers must be positive")
        self.H = int(hidden_size)
        self.K = int(n_components)
        self.n_layers = int(n_layers)
        self.sigma_floor = float(sigma_floor)
        self.feat_mean = 0.0
        self.feat_std = 1.0
        rng = as_rng(seed)
        self.params = ad.ParamStore()
        for layer in range(self.n_layers):
            gru_init(self.params, f"gru{layer}", 1 if layer == 0 else self.H, self.H, rng)
        bound = 1.0 / math.sqrt(self.H)
        for k in ("M", "S", "W"):
            self.params.add(f"head.{k}_w", rng.uniform(-bound, bound, (self.H, self.K)))
            self.params.add(f"head.{k}_b", np.zeros(self.K))

    @property
    def layers(self) -> list[GruWeights]:
        return [GruWeights.from_store(self.params, f"gru{i}") for i in range(self.n_layers)]

    @property
    def heads(self) -> MixtureHeads:
        return MixtureHeads.from_store(self.params)

    def fit_transform(self, gap_arrays) -> "SemmModel":
        lg = np.log(np.concatenate([np.asarray(g, float) for g in gap_arrays]))
        self.feat_mean = float(lg.mean())
        sd = float(lg.std())
        self.feat_std = sd if sd > 1e-12 else 1.0
        return self

    def zero_state(self, batch: int = 1) -> list[np.ndarray]:
        return [np.zeros((batch, self.H)) for _ in range(self.n_layers)]

    def copy(self) -> "SemmModel":
        m = SemmModel.__new__(SemmModel)
        m.H, m.K, m.n_layers, m.sigma_floor = self.H, self.K, self.n_layers, self.sigma_floor
        m.feat_mean, m.feat_std = self.feat_mean, self.feat_std
        m.params = ad.ParamStore()
        for k, t in self.params.items():
            m.params.add(k, t.data.copy())
        return m


def gap_features(model: SemmModel, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise SeqError("invalid gap: gaps must be strictly positive")
    return (np.log(g) - model.feat_mean) / model.feat_std


def _step_layers(layers, x, states):
    new_states = []
    inp = x
    for w, h in zip(layers, states):
        h = gru_step(w, inp, h)
        new_states.append(h)
        inp = h
    return new_states


def encode_features(model: SemmModel, feats: np.ndarray, states=None):
    """Run the recurrence over a (B, T) feature matrix.

    Returns ``(contexts, final_states)`` where ``contexts[i]`` is the (B, H)
    top-layer context *before* step ``i`` (so ``contexts[0]`` is the initial
    top state) and ``final_states`` are the per-layer states after the last
    step.
    """
    feats = np.asarray(feats, dtype=float)
    B, T = feats.shape
    layers = model.layers
    states = [ad.tensor(s) for s in (states or model.zero_state(B))]
    contexts = []
    for t in range(T):
        contexts.append(states[-1])
        states = _step_layers(layers, feats[:, t:t + 1], states)
    return contexts, states


def encode(model: SemmModel, gaps) -> list[ad.Tensor]:
    """Context vectors ``h_1..h_n`` for a single gap series (each of shape (H,))."""
    g = gaps.gaps if isinstance(gaps, GapSeries) else np.asarray(gaps, float)
    if g.size < 1:
        raise SeqError("encode needs at least one gap")
    feats = gap_features(model, g)[None, :]
    with ad.no_tape():
        ctx, _ = encode_features(model, feats)
    return [ad.Tensor(c.data[0]) for c in ctx]


def heads_tensors(model: SemmModel, h) -> tuple[ad.Tensor, ad.Tensor, ad.Tensor]:
    """(logits, M, log_sigma) for contexts ``h`` of shape (R, H)."""
    hd = model.heads
    h = ad.tensor(h)
    M = ad.add(ad.matmul(h, hd.M_w), hd.M_b)
    log_sigma = ad.clip_min(ad.add(ad.matmul(h, hd.S_w), hd.S_b), math.log(model.sigma_floor))
    logits = ad.add(ad.matmul(h, hd.W_w), hd.W_b)
    return logits, M, log_sigma


def heads_forward(model: SemmModel, h) -> MixtureParams:
    """Mixture parameters for a single context vector."""
    h = np.asarray(h.data if isinstance(h, ad.Tensor) else h, dtype=float).reshape(1, -1)
    if h.shape[1] != model.H:
        raise ad.ShapeError(f"heads_forward: context has size {h.shape[1]}, expected {model.H}")
    with ad.no_tape():
        logits, M, ls = heads_tensors(model, h)
    z = logits.data[0] - logits.data[0].max()
    W = np.exp(z) / np.exp(z).sum()
    return MixtureParams(W, M.data[0], np.exp(ls.data[0]))


def _batch_gaps(seqs) -> tuple[np.ndarray, np.ndarray]:
    arrays = []
    for s in seqs:
        if isinstance(s, PointSequence):
            arrays.append(_gaps(s).gaps)
        elif isinstance(s, GapSeries):
            arrays.append(s.gaps)
        else:
            arrays.append(np.asarray(s, float))
    T = max(a.size for a in arrays)
    g = np.ones((len(arrays), T))
    mask = np.zeros((len(arrays), T))
    for i, a in enumerate(arrays):
        g[i, :a.size] = a
        mask[i, :a.size] = 1.0
    return g, mask


def nll(model: SemmModel, seqs) -> ad.Tensor:
    """Mean negative log-likelihood per predicted gap over a batch of sequences.

    Accepts PointSequences, GapSeries or raw gap arrays; shorter sequences
    are padded and masked.
    """
    if isinstance(seqs, (PointSequence, GapSeries)):
        seqs = [seqs]
    g, mask = _batch_gaps(seqs)
    if np.any(mask.sum(axis=1) < 2):
        raise SeqError("nll needs at least 2 gaps per sequence")
    B, T = g.shape
    feats = gap_features(model, g)
    ctx, _ = encode_features(model, feats)
    H = ad.reshape(ad.stack(ctx, axis=1), (B * T, model.H))
    logits, M, ls = heads_tensors(model, H)
    logp = mixture_logpdf_tensor(np.log(g).reshape(-1), logits, M, ls)
    w = mask.reshape(-1)
    return ad.scale(ad.sum_(ad.mul(logp, w)), -1.0 / w.sum())
