"""Gap-distribution distances between the four point-process classes.

CUE eigenphases and unfolded zeta zeros should sit close together, far from
both Poisson and the clustered (attractive Gibbs) process.

    python demos/wasserstein_classes.py
"""
import numpy as np

from seqext import experiments as ex
from seqext import generators as gen
from seqext import stats
from seqext.seqcore import BinSpec


def main(n=8):
    root = np.random.SeedSequence(11)
    a, b, c = root.spawn(3)
    zeros = gen.load_zeta_zeros(ex.default_zeta_path())
    data = {
        "poisson": [gen.gen_poisson(gen.PoissonConfig(1.0, 500.0), s) for s in a.spawn(n)],
        "cue": [gen.gen_cue(gen.CueConfig(128), s) for s in b.spawn(n)],
        "zeta": gen.unfold_zeta(zeros, 500)[:n],
        "attractive": [gen.gen_gibbs_attractive(gen.GibbsConfig(window_T=500.0), s) for s in c.spawn(n)],
    }
    bins = BinSpec(0.0, 4.0, 40)
    hists = {k: [stats.gap_distribution(s, bins) for s in v] for k, v in data.items()}
    m = stats.wasserstein_matrix(hists)
    print(" " * 11 + "".join(f"{k:>11}" for k in m.labels))
    for lab, row in zip(m.labels, m.values):
        print(f"{lab:>11}" + "".join(f"{x:11.4f}" for x in row))


if __name__ == "__main__":
    main()
