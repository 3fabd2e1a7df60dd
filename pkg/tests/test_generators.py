import gzip
import math

import numpy as np
import pytest
from scipy import stats as sps

from seqext import generators as gen
from seqext.seqcore import BinSpec, PointSequence, SeqError, gaps, histogram, normalize_unit_density
from seqext.stats import (CurveKind, gap_distribution, mean_histogram, pair_correlation,
                          sup_deviation, wasserstein1)

# --- Poisson ------------------------------------------------------------------

def test_poisson_count_and_gap_law():
    seqs = [gen.gen_poisson(gen.PoissonConfig(1.0, 5000.0), i) for i in range(20)]
    assert all(abs(len(s) - 5000) < 3 * math.sqrt(5000) for s in seqs)
    # a single window has per-bin noise ~0.045 near x=0, so compare the expected curve
    g = mean_histogram([gap_distribution(s, BinSpec(0, 5, 50)) for s in seqs])
    assert sup_deviation(g, CurveKind.POISSON_GAP) < 0.05


def test_poisson_rescaled_mean_gap():
    s = normalize_unit_density(gen.gen_poisson(gen.PoissonConfig(2.0, 1000.0), 1))
    assert abs(np.diff(s.points).mean() - 1) < 0.05


def test_poisson_deterministic():
    c = gen.PoissonConfig(1.0, 200.0)
    assert gen.gen_poisson(c, 42) == gen.gen_poisson(c, 42)
    assert gen.gen_poisson(c, 42) != gen.gen_poisson(c, 43)


def test_poisson_config_validation():
    with pytest.raises(SeqError):
        gen.PoissonConfig(0.0, 10.0)
    with pytest.raises(SeqError, match="positive"):
        gen.PoissonConfig(1.0, 500.0, rate_slope=-0.01)
    with pytest.raises(SeqError, match="rate_slope"):
        gen.gen_poisson(gen.PoissonConfig(1.0, 10.0, 0.1), 0)


def test_nonstationary_zero_slope_matches_homogeneous():
    ps = []
    for i in range(20):
        a = gen.gen_poisson_nonstationary(gen.PoissonConfig(1.0, 500.0, 0.0), 100 + i)
        b = gen.gen_poisson(gen.PoissonConfig(1.0, 500.0), 200 + i)
        ps.append(sps.ks_2samp(gaps(a).gaps, gaps(b).gaps).pvalue)
    assert min(ps) > 0.01


def test_nonstationary_count_matches_integrated_rate():
    cfg = gen.PoissonConfig(1.0, 500.0, 0.002)
    t = np.linspace(0, 500, 100_001)
    expected = np.trapezoid(1.0 + 0.002 * t, t)
    assert expected == pytest.approx(750.0)
    counts = [len(gen.gen_poisson_nonstationary(cfg, i)) for i in range(20)]
    assert all(abs(c - expected) < 3 * math.sqrt(expected) for c in counts)
    assert abs(np.mean(counts) - expected) < 3 * math.sqrt(expected / 20)


def test_nonstationary_monotone_rate():
    cfg = gen.PoissonConfig(1.0, 500.0, 0.002)
    wins = 0
    for i in range(100):
        p = gen.gen_poisson_nonstationary(cfg, i).points
        wins += np.count_nonzero(p < 250) < np.count_nonzero(p >= 250)
    assert wins >= 95

# --- CUE ------------------------------------------------------------------------

def test_unfold_eigenphase_arithmetic():
    assert gen.unfold_eigenphases([math.pi], 4)[0] == pytest.approx(2.0)
    # negative angles from np.angle wrap into [0, 2 pi)
    assert gen.unfold_eigenphases([-math.pi / 2], 4)[0] == pytest.approx(3.0)


def test_haar_unitary_is_unitary():
    u = gen.haar_unitary(16, np.random.default_rng(0))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(16), atol=1e-12)


@pytest.fixture(scope="module")
def cue64():
    return [gen.gen_cue(gen.CueConfig(64), i) for i in range(200)]


def test_cue_window_and_mean_gap(cue64):
    assert all(s.window_T == 64 and len(s) == 64 for s in cue64)
    assert abs(np.mean([np.diff(s.points).mean() for s in cue64]) - 1) < 0.02


def test_cue_pair_correlation(cue64):
    f = mean_histogram([pair_correlation(s, BinSpec(0, 3, 30)) for s in cue64])
    assert sup_deviation(f, CurveKind.CUE_PAIRCORR, 0.2, 3.0) < 0.1


def test_cue_rotation_invariance(cue64):
    bins = BinSpec(0, 3, 30)
    rng = np.random.default_rng(9)
    rotated = []
    for s in cue64:
        # rotate the circle by a random angle, re-cut at 0
        p = np.sort(np.mod(s.points + rng.uniform(0, 64), 64.0))
        rotated.append(PointSequence(p, 64.0))
    a = mean_histogram([gap_distribution(s, bins).normalize() for s in cue64])
    b = mean_histogram([gap_distribution(s, bins).normalize() for s in rotated])
    assert wasserstein1(a, b) < 0.05


def test_cue_mcmc_fallback_matches_eigensolver(cue64):
    bins = BinSpec(0, 3, 30)
    mc = [gen.gen_cue(gen.CueConfig(64, method="mcmc", mcmc_sweeps=200), 1000 + i) for i in range(40)]
    a = mean_histogram([gap_distribution(s, bins).normalize() for s in cue64])
    b = mean_histogram([gap_distribution(s, bins).normalize() for s in mc])
    assert wasserstein1(a, b) < 0.05


def test_cue_eigensolver_failure(monkeypatch):
    def boom(_):
        raise np.linalg.LinAlgError("no convergence")
    monkeypatch.setattr(np.linalg, "eigvals", boom)
    with pytest.raises(SeqError, match="eigendecomposition did not converge"):
        gen.gen_cue(gen.CueConfig(8), 0)


def test_cue_config_validation():
    with pytest.raises(SeqError):
        gen.CueConfig(1)
    with pytest.raises(SeqError):
        gen.CueConfig(8, method="lanczos")

# --- Gibbs ----------------------------------------------------------------------

def test_pair_potential_values():
    assert gen.pair_potential_h(0.0) == 0.0
    assert gen.pair_potential_h(0.85) == pytest.approx(0.52200625, abs=1e-12)
    # exp(1.4 - 2.8) = exp(-1.4) is below the 0.85**4 cap
    assert gen.pair_potential_h(2.0) == pytest.approx(math.exp(-1.4), abs=1e-12)
    assert gen.pair_potential_h(3.0) == pytest.approx(math.exp(-2.8), abs=1e-12)
    assert gen.pair_potential_h(3.0) == pytest.approx(0.0608, abs=1e-4)
    r = np.array([0.0, 0.5, 0.85, 1.0, 2.0])
    assert gen.pair_potential_h(r).shape == (5,)


def test_gibbs_zero_potential_is_binomial():
    hs = [gap_distribution(gen.gen_gibbs_attractive(gen.GibbsConfig(), i, potential=lambda r: 0 * r),
                           BinSpec(0, 5, 50)).normalize() for i in range(3)]
    ref = np.exp(-hs[0].binspec.centers)
    assert np.max(np.abs(mean_histogram(hs).masses - ref)) < 0.07


@pytest.fixture(scope="module")
def gibbs_samples():
    return [gen.gen_gibbs_attractive(gen.GibbsConfig(), i, return_acceptance=True) for i in range(6)]


def test_gibbs_unit_density_and_acceptance(gibbs_samples):
    for s, acc in gibbs_samples:
        assert len(s) == 1750
        assert abs(np.diff(s.points).mean() - 1) < 1e-9
        assert 0.1 < acc < 0.7


def test_gibbs_short_gaps_over_represented(gibbs_samples):
    g = np.concatenate([gaps(s).gaps for s, _ in gibbs_samples])
    assert np.mean(g < 0.25) > 1 - math.exp(-0.25)


def test_gibbs_cutoff_insensitive(gibbs_samples):
    bins = BinSpec(0, 5, 50)
    wide = [gen.gen_gibbs_attractive(gen.GibbsConfig(cutoff=10.0), i) for i in range(3)]
    a = mean_histogram([gap_distribution(s, bins).normalize() for s, _ in gibbs_samples[:3]])
    b = mean_histogram([gap_distribution(s, bins).normalize() for s in wide])
    assert wasserstein1(a, b) < 0.05


def test_gibbs_deterministic():
    c = gen.GibbsConfig(window_T=20.0, mcmc_sweeps=5)
    assert gen.gen_gibbs_attractive(c, 3) == gen.gen_gibbs_attractive(c, 3)


def test_gibbs_detailed_balance_three_points():
    # n=3 on [0, T] with 10 cells; stationary law of unordered cell triples vs brute force
    T, n_cells = 3.0, 10
    rng = np.random.default_rng(0)
    x = rng.uniform(0, T, 3)
    counts = {}
    x, _ = gen.gibbs_chain(x, T, 200, 0.8, rng)
    for _ in range(60_000):
        x, _ = gen.gibbs_chain(x, T, 1, 0.8, rng)
        key = tuple(sorted(np.minimum((x / T * n_cells).astype(int), n_cells - 1)))
        counts[key] = counts.get(key, 0) + 1
    # brute-force integration of exp(-sum h) over each cell triple, 6 sub-points per cell axis
    m = 6
    grid = (np.arange(n_cells * m) + 0.5) * T / (n_cells * m)
    a, b, c = np.meshgrid(grid, grid, grid, indexing="ij")
    h = gen.pair_potential_h
    w = np.exp(-(h(np.abs(a - b)) + h(np.abs(a - c)) + h(np.abs(b - c))))
    cell = (np.arange(n_cells * m) // m)
    exact = {}
    ca, cb, cc = np.meshgrid(cell, cell, cell, indexing="ij")
    keys = np.sort(np.stack([ca.ravel(), cb.ravel(), cc.ravel()], axis=1), axis=1)
    flat = w.ravel()
    for k, v in zip(map(tuple, keys), flat):
        exact[k] = exact.get(k, 0.0) + v
    z = sum(exact.values())
    total = sum(counts.values())
    tv = 0.5 * sum(abs(counts.get(k, 0) / total - v / z) for k, v in exact.items())
    assert tv < 0.05

# --- zeta -------------------------------------------------------------------------

def test_load_zeta_zeros(tmp_path):
    f = tmp_path / "z.txt"
    f.write_text("# first zeros\n14.134725\n21.022040\n25.010858\n")
    np.testing.assert_array_equal(gen.load_zeta_zeros(f), [14.134725, 21.022040, 25.010858])
    g = tmp_path / "z.txt.gz"
    with gzip.open(g, "wt") as fh:
        fh.write("1 14.134725\n2 21.022040\n")
    assert gen.load_zeta_zeros(gen.ZetaSource(g, 2)).tolist() == [14.134725, 21.022040]


def test_load_zeta_errors(tmp_path):
    e = tmp_path / "empty.txt"
    e.write_text("")
    with pytest.raises(SeqError, match="no zeros"):
        gen.load_zeta_zeros(e)
    o = tmp_path / "order.txt"
    o.write_text("14.1\n25.0\n21.0\n")
    with pytest.raises(SeqError, match="order.txt:3"):
        gen.load_zeta_zeros(o)


def test_unfold_formula_plain():
    g = 14.134725
    # plain counting, one block of two points anchored at the first zero
    u = gen._unfold_plain(np.array([g]))[0]
    assert u == pytest.approx(1.825, abs=2e-3)
    assert u == pytest.approx(g * math.log(g / (2 * math.pi)) / (2 * math.pi))


def test_unfold_guard_and_shift():
    with pytest.raises(SeqError, match="2\\*pi"):
        gen.unfold_zeta([1.0, 14.1, 21.0], 2)
    blocks = gen.unfold_zeta([14.134725, 21.022040, 25.010858, 30.424876], 2)
    assert [b.points[0] for b in blocks] == [0.0, 0.0]
    assert all(np.all(np.diff(b.points) > 0) for b in blocks)


@pytest.fixture(scope="module")
def zeta():
    from seqext.experiments import default_zeta_path
    return gen.load_zeta_zeros(default_zeta_path())


def test_zeta_blocks_unit_mean_gap(zeta):
    # the bundled table starts at zero #1001, so the first 500 cover #1001-#1500
    b = gen.unfold_zeta(zeta[:500], 500)[0]
    assert abs(np.diff(b.points).mean() - 1) < 0.05
    assert len(b) == 500


def test_zeta_plain_counting_overshoots(zeta):
    b = gen.unfold_zeta(zeta[:500], 500, counting="plain")[0]
    assert np.diff(b.points).mean() > 1.1
