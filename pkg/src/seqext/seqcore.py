"""Core point-sequence and histogram primitives.

Every other module passes data around as one of the immutable containers
defined here: :class:`PointSequence` (sorted points in a window ``[0, T]``),
:class:`GapSeries` (consecutive differences plus the origin needed to invert
them), :class:`BinSpec` and :class:`Histogram`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SeqError",
    "PointSequence",
    "GapSeries",
    "BinSpec",
    "Histogram",
    "as_rng",
    "gaps",
    "cumsum",
    "normalize_unit_density",
    "histogram",
    "read_sequence",
    "write_sequence",
    "histogram_to_json",
    "histogram_from_json",
    "histogram_to_csv",
]


class SeqError(ValueError):
    """Raised when a sequence, gap series or histogram violates its contract."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def as_rng(seed) -> np.random.Generator:
    """Turn an integer seed (or an existing Generator) into a Generator.

    ``None`` is rejected on purpose: every stochastic routine in the package
    must be reproducible from an explicit seed.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise SeqError("an explicit seed is required")
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise SeqError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class PointSequence:
    """Strictly increasing points inside the window ``[0, window_T]``."""

    points: np.ndarray
    window_T: float

    def __init__(self, points: Iterable[float], window_T: float | None = None):
        pts = np.array(points, dtype=float).ravel()
        if pts.size and not np.all(np.isfinite(pts)):
            raise SeqError("points must be finite")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            bad = int(np.argmax(np.diff(pts) <= 0))
            raise SeqError(
                f"points must be strictly increasing (index {bad + 1}: "
                f"{pts[bad + 1]!r} after {pts[bad]!r})"
            )
        if window_T is None:
            window_T = float(pts[-1]) if pts.size else 0.0
        window_T = float(window_T)
        if not window_T > 0:
            raise SeqError(f"window_T must be positive, got {window_T}")
        if pts.size and (pts[0] < 0 or pts[-1] > window_T):
            raise SeqError(f"points must lie in [0, {window_T}]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window_T", window_T)

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSequence):
            return NotImplemented
        return self.window_T == other.window_T and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.window_T, self.points.tobytes()))

    def shifted(self, offset: float) -> "PointSequence":
        """Return the points translated by ``-offset``, with the window trimmed to match."""
        return PointSequence(self.points - offset, self.window_T - offset)


@dataclass(frozen=True)
class GapSeries:
    gaps: np.ndarray
    origin: float = 0.0

    def __init__(self, gaps: Iterable[float], origin: float = 0.0):
        arr = _frozen(list(gaps) if not isinstance(gaps, np.ndarray) else gaps)
        object.__setattr__(self, "gaps", arr.ravel())
        object.__setattr__(self, "origin", float(origin))

    def __len__(self) -> int:
        return self.gaps.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, GapSeries):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.gaps, other.gaps)

    def __hash__(self):
        return hash((self.origin, self.gaps.tobytes()))


@dataclass(frozen=True)
class BinSpec:
    """Equal-width binning of ``[lo, hi]`` into ``n_bins`` bins."""

    lo: float
    hi: float
    n_bins: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise SeqError(f"invalid bin range [{self.lo}, {self.hi}]")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise SeqError(f"n_bins must be a positive integer, got {self.n_bins}")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True)
class Histogram:
    """Binned curve.

    ``masses`` holds one value per bin. When ``normalized`` is true the
    masses are densities integrating to one; otherwise they are whatever the
    producer documents (raw counts for :func:`histogram`, scaled densities for
    the gap and pair-correlation estimators). ``underflow`` and ``overflow``
    count the values that fell outside the bin range.
    """

    binspec: BinSpec
    masses: np.ndarray
    normalized: bool = False
    underflow: int = 0
    overflow: int = 0

    def __init__(self, binspec: BinSpec, masses, normalized: bool = False,
                 underflow: int = 0, overflow: int = 0):
        m = _frozen(masses)
        if m.shape != (binspec.n_bins,):
            raise SeqError(f"expected {binspec.n_bins} masses, got shape {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise SeqError("histogram masses must be finite and non-negative")
        if normalized:
            area = float(np.sum(m) * binspec.width)
            if abs(area - 1.0) > 1e-9:
                raise SeqError(f"normalized histogram has area {area}, expected 1")
        object.__setattr__(self, "binspec", binspec)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "normalized", bool(normalized))
        object.__setattr__(self, "underflow", int(underflow))
        object.__setattr__(self, "overflow", int(overflow))

    @property
    def area(self) -> float:
        return float(np.sum(self.masses) * self.binspec.width)

    def normalize(self) -> "Histogram":
        """Rescale to unit area (no-op for already normalized histograms)."""
        if self.normalized:
            return self
        area = self.area
        if area <= 0:
            raise SeqError("empty histogram")
        return Histogram(self.binspec, self.masses / area, True, self.underflow, self.overflow)

    def cdf(self) -> np.ndarray:
        """Cumulative mass at the right edge of each bin."""
        return np.cumsum(self.masses) * self.binspec.width

    def __eq__(self, other) -> bool:
        if not isinstance(other, Histogram):
            return NotImplemented
        return (self.binspec == other.binspec and self.normalized == other.normalized
                and np.array_equal(self.masses, other.masses))

    def __hash__(self):
        return hash((self.binspec, self.masses.tobytes(), self.normalized))


def gaps(seq: PointSequence) -> GapSeries:
    """Consecutive differences of a sequence.

    >>> gaps(PointSequence([0, 1, 3], 3)).gaps.tolist()
    [1.0, 2.0]
    """
    if len(seq) < 2:
        raise SeqError("insufficient points: need at least 2 to form a gap")
    return GapSeries(np.diff(seq.points), origin=seq.points[0])


def cumsum(gs: GapSeries, window_T: float | None = None) -> PointSequence:
    """Invert :func:`gaps`: accumulate gaps starting from the origin."""
    g = gs.gaps
    if g.size and (np.any(~np.isfinite(g)) or np.any(g <= 0)):
        raise SeqError("invalid gap: gaps must be finite and strictly positive")
    # accumulate from the origin itself so each step reproduces x[i] + (x[i+1] - x[i])
    pts = np.cumsum(np.concatenate(([gs.origin], g)))
    if window_T is None:
        window_T = pts[-1] if pts[-1] > 0 else 1.0
    return PointSequence(pts, max(window_T, pts[-1]))


def normalize_unit_density(seq: PointSequence) -> PointSequence:
    """Scale points and window so that the mean gap becomes exactly one."""
    if len(seq) < 2:
        raise SeqError("insufficient points: need at least 2 to normalize")
    span = seq.points[-1] - seq.points[0]
    scale = (len(seq) - 1) / span
    return PointSequence(seq.points * scale, seq.window_T * scale)


def histogram(values: Sequence[float], bins: BinSpec, normalize: bool = False) -> Histogram:
    """Equal-width histogram with out-of-range tallies.

    Bins are half-open ``[e_i, e_{i+1})`` except the last, which is closed.
    With ``normalize`` the in-range masses are scaled to unit area.
    """
    v = np.asarray(values, dtype=float).ravel()
    under = int(np.count_nonzero(v < bins.lo))
    over = int(np.count_nonzero(v > bins.hi))
    inside = v[(v >= bins.lo) & (v <= bins.hi)]
    # index arithmetic instead of np.histogram: identical edges to BinSpec.edges
    idx = np.floor((inside - bins.lo) / bins.width).astype(np.int64)
    np.clip(idx, 0, bins.n_bins - 1, out=idx)
    counts = np.bincount(idx, minlength=bins.n_bins).astype(float)
    if normalize:
        if inside.size == 0:
            raise SeqError("empty histogram: no values inside the bin range")
        counts = counts / (inside.size * bins.width)
    return Histogram(bins, counts, normalize, under, over)


# --- file formats -----------------------------------------------------------

def read_sequence(path) -> PointSequence:
    """Read a sequence file: one number per line, optional ``# T=<window>`` header."""
    window_T = None
    pts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip().replace(" ", "")
                if body.startswith("T="):
                    window_T = float(body[2:])
                continue
            try:
                pts.append(float(s))
            except ValueError:
                raise SeqError(f"{path}:{lineno}: cannot parse {s!r}") from None
    return PointSequence(pts, window_T)


def write_sequence(seq: PointSequence, path) -> None:
    lines = [f"# T={seq.window_T!r}"] + [repr(float(x)) for x in seq.points]
    Path(path).write_text("\n".join(lines) + "\n")


def histogram_to_json(h: Histogram) -> dict:
    return {
        "lo": h.binspec.lo,
        "hi": h.binspec.hi,
        "n_bins": h.binspec.n_bins,
        "masses": [float(m) for m in h.masses],
        "normalized": h.normalized,
    }


def histogram_from_json(obj) -> Histogram:
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    return Histogram(BinSpec(obj["lo"], obj["hi"], obj["n_bins"]), obj["masses"],
                     obj.get("normalized", False))


def histogram_to_csv(h: Histogram) -> str:
    rows = ["bin_center,value"]
    rows += [f"{c!r},{m!r}" for c, m in zip(h.binspec.centers, h.masses)]
    return "\n".join(rows) + "\n"
