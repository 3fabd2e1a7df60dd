import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from seqext import generators as gen
from seqext import stats
from seqext.seqcore import BinSpec, Histogram, PointSequence, SeqError, histogram
from seqext.stats import CurveKind


def _point_mass(bins: BinSpec, x: float) -> Histogram:
    return histogram([x], bins, normalize=True)


def test_gap_distribution_counts_per_point():
    h = stats.gap_distribution(PointSequence([0, 1, 3], 3), BinSpec(0.5, 1.5, 1))
    # one qualifying gap, three points, unit bin width
    assert h.masses[0] == pytest.approx(1 / 3)
    u = stats.gap_distribution(PointSequence(np.arange(10.0)), BinSpec(0, 2, 4))
    assert np.count_nonzero(u.masses) == 1 and u.masses[2] > 0


def test_gap_distribution_poisson_expected_curve():
    seqs = [gen.gen_poisson(gen.PoissonConfig(1.0, 5000.0), 50 + i) for i in range(20)]
    g = stats.mean_histogram([stats.gap_distribution(s, BinSpec(0, 5, 50)) for s in seqs])
    assert stats.sup_deviation(g, CurveKind.POISSON_GAP) < 0.05


def test_pair_correlation_brute_force():
    h = stats.pair_correlation(PointSequence([0, 1, 2], 3), BinSpec(0.5, 1.5, 1))
    assert h.masses[0] == pytest.approx(2 / 3)
    one = stats.pair_correlation(PointSequence([0, 1], 4), BinSpec(0, 100, 1))
    assert one.masses[0] * 100 == pytest.approx(1 / 4)


def test_pair_correlation_matches_all_pairs():
    p = np.sort(np.random.default_rng(1).uniform(0, 30, 40))
    s = PointSequence(p, 30)
    b = BinSpec(0, 4, 16)
    h = stats.pair_correlation(s, b)
    d = (p[:, None] - p[None, :]).ravel()
    d = d[d > 0]
    counts, _ = np.histogram(d, b.edges)
    np.testing.assert_allclose(h.masses, counts / (30 * b.width), atol=1e-12)


def test_pair_correlation_poisson():
    seqs = [gen.gen_poisson(gen.PoissonConfig(1.0, 5000.0), 80 + i) for i in range(10)]
    f = stats.mean_histogram([stats.pair_correlation(s, BinSpec(0, 5, 50)) for s in seqs])
    assert stats.sup_deviation(f, CurveKind.POISSON_PAIRCORR) < 0.1


def test_pair_correlation_errors():
    with pytest.raises(SeqError):
        stats.pair_correlation(PointSequence([1.0], 2), BinSpec(0, 1, 2))
    with pytest.raises(SeqError):
        stats.pair_correlation(PointSequence([0.0, 1.0], 2), BinSpec(-1, 1, 2))


@given(st.lists(st.integers(0, 4000), min_size=2, max_size=80, unique=True))
def test_pair_correlation_reflection_symmetry(ix):
    # dyadic grid so that T - x is exact and stays tie-free
    x = np.array(ix, dtype=float) / 64
    T = 4000 / 64
    s = PointSequence(np.sort(x), T)
    r = PointSequence(np.sort(T - x), T)
    b = BinSpec(0, 5, 20)
    np.testing.assert_allclose(stats.pair_correlation(s, b).masses,
                               stats.pair_correlation(r, b).masses, atol=1e-12)


def test_k_gap_examples():
    h = stats.k_gap_distribution(PointSequence([0, 1, 3], 3), 2, BinSpec(0, 4, 4))
    assert h.masses.tolist() == [0, 0, 0, 1]
    with pytest.raises(SeqError):
        stats.k_gap_distribution(PointSequence([0, 1], 1), 2, BinSpec(0, 4, 4))
    with pytest.raises(SeqError):
        stats.k_gap_distribution(PointSequence([0, 1, 2], 2), 0, BinSpec(0, 4, 4))


def test_k1_proportional_to_gap_distribution():
    s = gen.gen_poisson(gen.PoissonConfig(1.0, 300.0), 4)
    b = BinSpec(0, 3, 30)
    k1 = stats.k_gap_distribution(s, 1, b)
    g = stats.gap_distribution(s, b)
    ratio = g.masses[k1.masses > 0] / k1.masses[k1.masses > 0]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
    # the constant is (#gaps in range) / #points
    assert ratio[0] == pytest.approx((len(s) - 1 - g.overflow) / len(s))


def test_two_gap_poisson_is_gamma():
    seqs = [gen.gen_poisson(gen.PoissonConfig(1.0, 5000.0), 300 + i) for i in range(10)]
    b = BinSpec(0, 8, 40)
    h = stats.mean_histogram([stats.k_gap_distribution(s, 2, b) for s in seqs])
    c = b.centers
    assert np.max(np.abs(h.masses - c * np.exp(-c))) < 0.05


def test_self_convolve_examples():
    u = stats.self_convolve(Histogram(BinSpec(0, 1, 20), np.ones(20), True))
    assert u.binspec == BinSpec(0, 2, 40)
    c = u.binspec.centers
    tri = np.where(c < 1, c, 2 - c)
    assert np.max(np.abs(u.masses - tri)) < 0.06
    assert np.argmax(u.masses) in (19, 20)
    pm = stats.self_convolve(_point_mass(BinSpec(0, 4, 8), 1.25))
    # bin [1,1.5) doubles to [2,3): mass split over the two bins there
    nz = np.flatnonzero(pm.masses)
    assert pm.binspec.centers[nz].tolist() == [2.25, 2.75]
    with pytest.raises(SeqError):
        stats.self_convolve(Histogram(BinSpec(0, 1, 2), [1.0, 1.0]))


def test_self_convolve_exp_is_gamma():
    b = BinSpec(0, 15, 300)
    c = b.centers
    h = Histogram(b, np.exp(-c) / (np.exp(-c).sum() * b.width), True)
    out = stats.self_convolve(h)
    x = out.binspec.centers
    assert np.max(np.abs(out.masses - x * np.exp(-x))) < 0.03
    assert out.area == pytest.approx(1.0)


def test_wasserstein_examples():
    b = BinSpec(0, 1, 10)
    h = histogram(np.random.default_rng(0).random(100), b, normalize=True)
    assert stats.wasserstein1(h, h) == 0.0
    pm = BinSpec(-0.5, 1.5, 2)
    assert stats.wasserstein1(_point_mass(pm, 0), _point_mass(pm, 1)) == pytest.approx(1.0)
    fine = BinSpec(0, 20, 2000)
    x = fine.centers
    a = Histogram(fine, np.exp(-x) / (np.exp(-x).sum() * fine.width), True)
    s = np.where(x >= 0.5, np.exp(-(x - 0.5)), 0)
    b2 = Histogram(fine, s / (s.sum() * fine.width), True)
    assert stats.wasserstein1(a, b2) == pytest.approx(0.5, abs=fine.width)


def test_wasserstein_rebin():
    a = histogram([0.2, 0.4], BinSpec(0, 1, 5), normalize=True)
    b = histogram([0.2, 0.4], BinSpec(0, 1, 10), normalize=True)
    with pytest.raises(SeqError, match="rebin"):
        stats.wasserstein1(a, b)
    assert stats.wasserstein1(a, b, rebin=True) < 0.06
    with pytest.raises(SeqError):
        stats.wasserstein1(Histogram(BinSpec(0, 1, 2), [1, 1]), a)


hist_masses = arrays(np.float64, 12, elements=st.floats(0, 10)).filter(lambda m: m.sum() > 1e-3)


@given(hist_masses, hist_masses, hist_masses)
def test_wasserstein_metric_properties(a, b, c):
    bs = BinSpec(0, 6, 12)
    A, B, C = (Histogram(bs, m / (m.sum() * bs.width), True) for m in (a, b, c))
    ab, bc, ac = stats.wasserstein1(A, B), stats.wasserstein1(B, C), stats.wasserstein1(A, C)
    assert ab == pytest.approx(stats.wasserstein1(B, A), abs=1e-12)
    assert ac <= ab + bc + 1e-12


def test_rmse_examples():
    assert stats.rmse([1, 2], [1, 2]) == 0.0
    assert stats.rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
    assert stats.rmse(np.arange(5.0), np.arange(5.0) + 2.5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        stats.rmse([1, 2], [1])


def test_pearson_examples():
    a = np.array([1.0, 3, 2, 5])
    assert stats.pearson(a, a) == pytest.approx(1.0)
    assert stats.pearson(a, -a) == pytest.approx(-1.0)
    assert stats.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.9820, abs=1e-4)
    with pytest.raises(SeqError, match="zero variance"):
        stats.pearson([1, 1, 1], [1, 2, 3])


def test_reference_curves():
    r = stats.reference_curve
    assert r(CurveKind.CUE_PAIRCORR, [1.0])[0] == pytest.approx(1.0, abs=1e-15)
    assert r(CurveKind.CUE_PAIRCORR, [0.0])[0] == 0.0
    assert r(CurveKind.CUE_PAIRCORR, [1e-9])[0] == pytest.approx(0.0, abs=1e-15)
    assert r(CurveKind.CUE_PAIRCORR, [0.5])[0] == pytest.approx(1 - (2 / math.pi) ** 2, abs=1e-12)
    assert r("poisson_gap", [0.0, 1.0]).tolist() == [1.0, math.exp(-1)]
    assert np.all(r(CurveKind.POISSON_PAIRCORR, [0, 2, 9]) == 1)
    xs = np.linspace(0, 60, 6001)
    assert np.all(r(CurveKind.CUE_PAIRCORR, xs) <= 1)
    assert abs(r(CurveKind.CUE_PAIRCORR, [50.0])[0] - 1) < 1e-3


def test_wasserstein_matrix_examples():
    bs = BinSpec(-0.5, 1.5, 2)
    zero, one = _point_mass(bs, 0), _point_mass(bs, 1)
    m = stats.wasserstein_matrix({"a": [zero, zero], "b": [one]})
    assert m["a", "b"] == pytest.approx(1.0) and m["a", "a"] == 0
    same = stats.wasserstein_matrix({"a": [zero], "a2": [zero]})
    assert same["a", "a2"] == 0
    avg = stats.wasserstein_matrix({"a": [zero, one], "b": [one]}, mode="averaged")
    assert avg["a", "b"] == pytest.approx(0.5)
    with pytest.raises(SeqError, match="empty"):
        stats.wasserstein_matrix({"a": [zero], "b": []})
    with pytest.raises(SeqError):
        stats.wasserstein_matrix({"a": [zero]})


def test_distance_matrix_invariants():
    with pytest.raises(SeqError):
        stats.DistanceMatrix(("a", "b"), [[0, 1], [2, 0]])
    with pytest.raises(SeqError):
        stats.DistanceMatrix(("a", "b"), [[1, 1], [1, 0]])


def test_mean_histogram_requires_same_bins():
    with pytest.raises(SeqError):
        stats.mean_histogram([histogram([0.5], BinSpec(0, 1, 2)), histogram([0.5], BinSpec(0, 1, 3))])
    with pytest.raises(SeqError):
        stats.mean_histogram([])
