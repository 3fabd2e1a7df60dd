"""Comparison metrics between predicted and held-out continuations."""
from __future__ import annotations

import numpy as np

from ..seqcore import BinSpec
from ..stats import pearson, rmse

__all__ = ["gap_density", "gap_histogram_scores", "terms_rmse"]


def gap_density(gaps, bins: BinSpec) -> np.ndarray:
    """Histogram density of gaps, normalized by the total count.

    Out-of-range values (including non-positive gaps a regression model may
    emit) count in the denominator, so they lower the in-range mass.
    """
    g = np.asarray(gaps, dtype=float).ravel()
    counts, _ = np.histogram(g, bins.edges)
    return counts / (g.size * bins.width)


def gap_histogram_scores(pred, true, bins: BinSpec = BinSpec(0.0, 5.0, 50)) -> dict:
    """Per-sequence gap-histogram RMSE and Pearson correlation, averaged.

    ``pred`` and ``true`` are sequences of gap arrays (one per test sequence).
    Sequences whose predicted histogram is constant have no defined
    correlation and are skipped for Pearson only.
    """
    if len(pred) != len(true) or len(pred) == 0:
        raise ValueError("pred and true must be non-empty and of equal length")
    r, p = [], []
    for a, b in zip(pred, true):
        da, db = gap_density(a, bins), gap_density(b, bins)
        r.append(rmse(da, db))
        if np.ptp(da) > 0 and np.ptp(db) > 0:
            p.append(pearson(da, db))
    return {"rmse": float(np.mean(r)), "rmse_sd": float(np.std(r)),
            "pearson": float(np.mean(p)) if p else float("nan"),
            "pearson_sd": float(np.std(p)) if p else float("nan")}


def terms_rmse(pred_positions, true_positions) -> float:
    """RMSE between predicted and true future positions, pooled over sequences."""
    d = np.concatenate([np.asarray(a, float) - np.asarray(b, float)
                        for a, b in zip(pred_positions, true_positions)])
    return float(np.sqrt(np.mean(d * d)))
