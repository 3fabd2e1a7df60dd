"""Baseline extension: rejection sampling from the empirical gap histogram.

New gaps are drawn iid from the piecewise-constant density of the input's
gaps and appended after the last input point. This preserves the gap
distribution by construction but ignores any correlation between gaps,
which is exactly why it fails on rigid sequences such as CUE eigenphases.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqcore import BinSpec, Histogram, PointSequence, SeqError, as_rng, gaps, histogram

__all__ = ["RejectionConfig", "Extension", "rejection_sample", "default_gap_bins",
           "extend_rejection"]


MAX_ROUND = 1 << 20  # proposals per round; bounds memory for spiky histograms


@dataclass(frozen=True)
class RejectionConfig:
    n_new: int = 500
    bins: BinSpec | None = None  # None: 50 bins over [0, 1.05 * max gap]
    n_bins: int = 50
    max_tries: int = 1000

    def __post_init__(self):
        if int(self.n_new) != self.n_new or self.n_new < 1:
            raise SeqError("n_new must be a positive integer")
        if self.max_tries < 1:
            raise SeqError("max_tries must be >= 1")


@dataclass(frozen=True)
class Extension:
    """An extended sequence plus the index where the appended points start."""

    sequence: PointSequence
    n_old: int

    @property
    def old(self) -> PointSequence:
        p = self.sequence.points[: self.n_old]
        return PointSequence(p, max(p[-1], 1e-300))

    @property
    def new(self) -> PointSequence:
        """Appended points only, measured from the last input point."""
        p = self.sequence.points
        anchor = p[self.n_old - 1]
        new = p[self.n_old:] - anchor
        return PointSequence(new, new[-1] if new.size else 1.0)

    @property
    def n_new(self) -> int:
        return len(self.sequence) - self.n_old


def rejection_sample(pdf: Histogram, n: int, seed, max_tries: int = 1000) -> np.ndarray:
    """Draw ``n`` values from a piecewise-constant density by rejection.

    Proposals are uniform over the histogram support and accepted with
    probability ``f(x) / max f``. ``max_tries`` bounds the number of proposal
    rounds (each round proposes as many values as are still missing, scaled
    by the expected acceptance rate, capped at ``MAX_ROUND``).
    """
    if not pdf.normalized:
        raise SeqError("rejection_sample needs a normalized histogram")
    rng = as_rng(seed)
    bs = pdf.binspec
    fmax = float(pdf.masses.max())
    accept_rate = 1.0 / (fmax * (bs.hi - bs.lo))
    out: list[np.ndarray] = []
    have = 0
    for _ in range(max_tries):
        if have >= n:
            break
        m = min(int(np.ceil((n - have) / accept_rate)) + 8, MAX_ROUND)
        x = rng.uniform(bs.lo, bs.hi, m)
        idx = np.minimum(((x - bs.lo) / bs.width).astype(np.int64), bs.n_bins - 1)
        keep = rng.random(m) * fmax < pdf.masses[idx]
        out.append(x[keep])
        have += int(keep.sum())
    if have < n:
        raise SeqError(f"rejection sampling exhausted {max_tries} rounds with {have}/{n} draws")
    return np.concatenate(out)[:n] if out else np.empty(0)


def default_gap_bins(g: np.ndarray, n_bins: int = 50) -> BinSpec:
    return BinSpec(0.0, 1.05 * float(np.max(g)), n_bins)


def extend_rejection(seq: PointSequence, cfg: RejectionConfig, seed) -> Extension:
    """Append ``cfg.n_new`` points with gaps drawn from the input gap histogram."""
    g = gaps(seq).gaps
    bins = cfg.bins or default_gap_bins(g, cfg.n_bins)
    pdf = histogram(g, bins, normalize=True)
    rng = as_rng(seed)
    new_gaps = rejection_sample(pdf, cfg.n_new, rng, cfg.max_tries)
    while np.any(new_gaps <= 0):
        # exact zero draws (lo == 0) have probability ~2**-53; redraw them
        bad = new_gaps <= 0
        new_gaps[bad] = rejection_sample(pdf, int(bad.sum()), rng, cfg.max_tries)
    last = seq.points[-1]
    new_pts = np.cumsum(np.concatenate(([last], new_gaps)))[1:]
    pts = np.concatenate([seq.points, new_pts])
    return Extension(PointSequence(pts, max(seq.window_T, pts[-1])), len(seq))
