"""Autoregressive extension and multi-step forecasting with a trained model."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..rejext import Extension
from ..seqcore import PointSequence, SeqError, gaps as _gaps
from .mixture import MixtureParams
from .model import SemmModel, encode_features, gap_features, heads_tensors, _step_layers

__all__ = ["extend_semm", "extend_semm_batch", "forecast_semm", "step_params"]


def step_params(model: SemmModel, h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise (W, M, Sigma) arrays for contexts of shape (B, H)."""
    with ad.no_tape():
        logits, M, ls = heads_tensors(model, h)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    W = np.exp(z)
    W /= W.sum(axis=1, keepdims=True)
    return W, M.data, np.exp(ls.data)


def _encode_observed(model: SemmModel, seqs):
    # per-layer states after consuming every observed gap, batched over seqs
    states = [np.zeros((len(seqs), model.H)) for _ in range(model.n_layers)]
    by_len: dict[int, list[int]] = {}
    gap_list = [_gaps(s).gaps for s in seqs]
    for i, g in enumerate(gap_list):
        by_len.setdefault(g.size, []).append(i)
    with ad.no_tape():
        for idx in by_len.values():
            feats = np.stack([gap_features(model, gap_list[i]) for i in idx])
            _, final = encode_features(model, feats)
            for layer, st in enumerate(final):
                states[layer][idx] = st.data
    return states


def _draw(W, M, S, rng: np.random.Generator) -> float:
    k = int(rng.choice(W.size, p=W)) if W.size > 1 else 0
    return float(np.exp(S[k] * rng.standard_normal() + M[k]))


def _rollout(model: SemmModel, seqs, n_new: int, choose) -> list[np.ndarray]:
    states = _encode_observed(model, seqs)
    B = len(seqs)
    out = np.empty((B, n_new))
    layers = model.layers
    with ad.no_tape():
        for t in range(n_new):
            W, M, S = step_params(model, states[-1])
            tau = np.array([choose(i, W[i], M[i], S[i]) for i in range(B)])
            out[:, t] = tau
            x = gap_features(model, tau)[:, None]
            states = [s.data for s in _step_layers(layers, x, [ad.Tensor(s) for s in states])]
    return list(out)


def _to_extension(seq: PointSequence, new_gaps: np.ndarray) -> Extension:
    last = seq.points[-1]
    new_pts = np.cumsum(np.concatenate(([last], new_gaps)))[1:]
    pts = np.concatenate([seq.points, new_pts])
    return Extension(PointSequence(pts, max(seq.window_T, pts[-1])), len(seq))


def extend_semm_batch(model: SemmModel, seqs, n_new: int, seed) -> list[Extension]:
    """Extend several sequences at once; sequence ``i`` uses its own spawned RNG stream."""
    if n_new < 0:
        raise SeqError("n_new must be non-negative")
    for s in seqs:
        if len(s) < 2:
            raise SeqError("each sequence needs at least 2 points")
    if n_new == 0:
        return [Extension(s, len(s)) for s in seqs]
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    rngs = [np.random.default_rng(c) for c in ss.spawn(len(seqs))]
    new = _rollout(model, seqs, n_new, lambda i, W, M, S: _draw(W, M, S, rngs[i]))
    return [_to_extension(s, g) for s, g in zip(seqs, new)]


def extend_semm(model: SemmModel, seq: PointSequence, n_new: int, seed) -> Extension:
    """Append ``n_new`` sampled gaps, carrying the recurrent state between steps."""
    return extend_semm_batch(model, [seq], n_new, seed)[0]


def forecast_semm(model: SemmModel, seqs, n_new: int, n_samples: int = 64, seed=0) -> list[np.ndarray]:
    """Multi-step point forecast of the next ``n_new`` positions.

    With ``n_samples > 0`` the forecast is the average of that many sampled
    extensions, an estimate of the conditional mean position at every
    horizon. ``n_samples=0`` gives the cheaper deterministic rollout that
    feeds back the conditional mean gap ``sum_k W_k exp(M_k + Sigma_k^2/2)``;
    a constant fed-back gap is atypical input for the recurrence, and in
    practice that rollout drifts over long horizons.
    """
    if n_samples < 0:
        raise SeqError("n_samples must be non-negative")
    if n_new == 0:
        return [np.empty(0) for _ in seqs]
    if n_samples == 0:
        mean = lambda i, W, M, S: float(np.sum(W * np.exp(M + 0.5 * S * S)))  # noqa: E731
        new = _rollout(model, seqs, n_new, mean)
        return [s.points[-1] + np.cumsum(g) for s, g in zip(seqs, new)]
    rep = [s for s in seqs for _ in range(n_samples)]
    ext = extend_semm_batch(model, rep, n_new, seed)
    paths = np.array([e.sequence.points[-n_new:] for e in ext]).reshape(len(seqs), n_samples, n_new)
    return list(paths.mean(axis=1))


def params_along(model: SemmModel, seq: PointSequence) -> list[MixtureParams]:
    """Per-step mixture parameters under teacher forcing (one per gap)."""
    g = _gaps(seq).gaps
    with ad.no_tape():
        ctx, _ = encode_features(model, gap_features(model, g)[None, :])
        H = np.concatenate([c.data for c in ctx], axis=0)
    W, M, S = step_params(model, H)
    return [MixtureParams(W[i] / W[i].sum(), M[i], S[i]) for i in range(len(ctx))]
