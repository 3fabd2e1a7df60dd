"""Empirical descriptors of point sequences and the metrics used to compare them."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .seqcore import BinSpec, Histogram, PointSequence, SeqError, gaps, histogram

__all__ = [
    "CurveKind",
    "DistanceMatrix",
    "gap_distribution",
    "pair_correlation",
    "k_gap_distribution",
    "self_convolve",
    "wasserstein1",
    "rmse",
    "pearson",
    "reference_curve",
    "wasserstein_matrix",
    "mean_histogram",
    "sup_deviation",
]


class CurveKind(str, enum.Enum):
    POISSON_GAP = "poisson_gap"
    POISSON_PAIRCORR = "poisson_paircorr"
    CUE_PAIRCORR = "cue_paircorr"


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = len(self.labels)
        if v.shape != (n, n):
            raise SeqError(f"distance matrix shape {v.shape} does not match {n} labels")
        if np.any(v < 0) or not np.allclose(v, v.T, rtol=0, atol=1e-12) or np.any(np.diag(v) != 0):
            raise SeqError("distance matrix must be non-negative, symmetric, zero-diagonal")
        v.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", v)

    def __getitem__(self, pair) -> float:
        a, b = pair
        return float(self.values[self.labels.index(a), self.labels.index(b)])


def gap_distribution(seq: PointSequence, bins: BinSpec) -> Histogram:
    """Empirical gap distribution G as a density.

    Bin counts of consecutive gaps are divided by the number of *points*
    (not gaps) and by the bin width, so the result integrates to
    ``(#gaps in range) / #points`` rather than one. Call ``.normalize()`` for
    a unit-area version.
    """
    g = gaps(seq).gaps
    raw = histogram(g, bins)
    masses = raw.masses / (len(seq) * bins.width)
    return Histogram(bins, masses, False, raw.underflow, raw.overflow)


def _positive_differences(points: np.ndarray, hi: float) -> np.ndarray:
    # all x_n - x_m with n > m and difference <= hi; points are sorted
    out = []
    for k in range(1, points.size):
        d = points[k:] - points[:-k]
        d = d[d <= hi]
        if d.size == 0:
            break
        out.append(d)
    return np.concatenate(out) if out else np.empty(0)


def pair_correlation(seq: PointSequence, bins: BinSpec) -> Histogram:
    """Empirical pair correlation F as a density over positive lags.

    Counts ordered pairs with ``lo <= x_n - x_m < hi`` and divides by the
    window length and the bin width, so a unit-density Poisson sample gives
    values near one.
    """
    if len(seq) < 2:
        raise SeqError("insufficient points: need at least 2 for pair correlation")
    if bins.lo < 0:
        raise SeqError("pair correlation bins must have lo >= 0")
    d = _positive_differences(seq.points, bins.hi)
    raw = histogram(d, bins)
    masses = raw.masses / (seq.window_T * bins.width)
    return Histogram(bins, masses, False, raw.underflow, raw.overflow)


def k_gap_distribution(seq: PointSequence, k: int, bins: BinSpec) -> Histogram:
    """Unit-area histogram of the k-gaps ``x_{n+k} - x_n``."""
    if k < 1:
        raise SeqError("k must be a positive integer")
    if len(seq) < k + 1:
        raise SeqError(f"insufficient points: need at least {k + 1} for {k}-gaps")
    p = seq.points
    return histogram(p[k:] - p[:-k], bins, normalize=True)


def self_convolve(h: Histogram) -> Histogram:
    """Density of X + Y for X, Y iid with the piecewise-constant density ``h``.

    The convolution of two bin-uniform pieces is a triangle spanning two
    output bins with half its mass in each, so the output bin masses are
    exact for the piecewise-constant input. Output bins have the input
    width over ``[2 lo, 2 hi]``.
    """
    if not h.normalized:
        raise SeqError("self_convolve needs a normalized histogram")
    w = h.binspec.width
    p = h.masses * w
    c = np.convolve(p, p)
    out = 0.5 * (np.append(c, 0.0) + np.insert(c, 0, 0.0))
    bs = BinSpec(2 * h.binspec.lo, 2 * h.binspec.hi, 2 * h.binspec.n_bins)
    out = out / (out.sum() * w)
    return Histogram(bs, out, True)


def _cdf_on(h: Histogram, x: np.ndarray) -> np.ndarray:
    # piecewise-constant density -> piecewise-linear CDF
    e = h.binspec.edges
    c = np.concatenate([[0.0], h.cdf()])
    return np.interp(x, e, c, left=0.0, right=1.0)


def wasserstein1(a: Histogram, b: Histogram, rebin: bool = False, n_grid: int = 200) -> float:
    """Wasserstein-1 distance between two unit-area histograms.

    With matching bins this is ``sum |CDF_a - CDF_b| * width`` over bin
    edges. ``rebin=True`` lifts both CDFs onto a common ``n_grid``-bin grid
    by linear interpolation first.
    """
    if not (a.normalized and b.normalized):
        raise SeqError("wasserstein1 needs normalized histograms")
    if a.binspec == b.binspec:
        return float(np.sum(np.abs(a.cdf() - b.cdf())) * a.binspec.width)
    if not rebin:
        raise SeqError(f"incompatible bins {a.binspec} vs {b.binspec}; pass rebin=True")
    lo = min(a.binspec.lo, b.binspec.lo)
    hi = max(a.binspec.hi, b.binspec.hi)
    x = np.linspace(lo, hi, n_grid + 1)
    diff = np.abs(_cdf_on(a, x) - _cdf_on(b, x))
    # trapezoid on the grid; both CDFs are linear between their own edges
    return float(np.sum(0.5 * (diff[1:] + diff[:-1]) * np.diff(x)))


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise SeqError(f"rmse needs equal non-empty lengths, got {a.shape} and {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise SeqError("pearson needs equal lengths >= 2")
    da = a - a.mean()
    db = b - b.mean()
    na, nb = np.sqrt(da @ da), np.sqrt(db @ db)
    if na == 0 or nb == 0:
        raise SeqError("zero variance: pearson correlation undefined")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def reference_curve(kind, xs) -> np.ndarray:
    """Closed-form targets: ``exp(-x)``, ``1`` and ``1 - (sin(pi x)/(pi x))**2``."""
    kind = CurveKind(kind)
    x = np.asarray(xs, dtype=float)
    if kind is CurveKind.POISSON_GAP:
        return np.exp(-x)
    if kind is CurveKind.POISSON_PAIRCORR:
        return np.ones_like(x)
    # np.sinc(x) = sin(pi x)/(pi x) with sinc(0) = 1
    return 1.0 - np.sinc(x) ** 2


def mean_histogram(hists: Sequence[Histogram]) -> Histogram:
    """Bin-wise mean of histograms sharing one BinSpec."""
    if not hists:
        raise SeqError("mean_histogram needs at least one histogram")
    bs = hists[0].binspec
    if any(h.binspec != bs for h in hists):
        raise SeqError("mean_histogram needs identical bins")
    m = np.mean([h.masses for h in hists], axis=0)
    normalized = all(h.normalized for h in hists)
    if normalized:
        m = m / (m.sum() * bs.width)
    return Histogram(bs, m, normalized)


def sup_deviation(h: Histogram, kind, lo: float | None = None, hi: float | None = None) -> float:
    """Largest ``|h - reference|`` over bin centres inside ``[lo, hi]``."""
    c = h.binspec.centers
    mask = np.ones(c.size, bool)
    if lo is not None:
        mask &= c >= lo
    if hi is not None:
        mask &= c <= hi
    return float(np.max(np.abs(h.masses[mask] - reference_curve(kind, c[mask]))))


def wasserstein_matrix(datasets: Mapping[str, Sequence[Histogram]],
                       mode: str = "pairwise") -> DistanceMatrix:
    """Class-by-class W1 distances.

    ``mode="pairwise"`` averages W1 over all cross-class histogram pairs;
    ``mode="averaged"`` compares the class-mean histograms. The diagonal is
    zero by definition.
    """
    labels = list(datasets)
    if len(labels) < 2:
        raise SeqError("wasserstein_matrix needs at least two classes")
    for name in labels:
        if len(datasets[name]) == 0:
            raise SeqError(f"empty class {name!r}")
    n = len(labels)
    vals = np.zeros((n, n))
    means = {k: mean_histogram([h.normalize() for h in v]) for k, v in datasets.items()}
    for i, j in itertools.combinations(range(n), 2):
        a, b = datasets[labels[i]], datasets[labels[j]]
        if mode == "pairwise":
            d = np.mean([wasserstein1(x.normalize(), y.normalize(), rebin=True)
                         for x in a for y in b])
        elif mode == "averaged":
            d = wasserstein1(means[labels[i]], means[labels[j]], rebin=True)
        else:
            raise SeqError(f"unknown mode {mode!r}")
        vals[i, j] = vals[j, i] = d
    return DistanceMatrix(tuple(labels), vals)
