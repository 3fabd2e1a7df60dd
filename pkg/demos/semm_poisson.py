"""Train a small mixture model on Poisson data and extend held-out sequences.

The trained model's simulated gaps should follow exp(-x). Prints the loss
history and the W1 distance of the simulated gap histogram to the target.

    python demos/semm_poisson.py [epochs]
"""
import sys

import numpy as np

from seqext import generators as gen
from seqext import stats
from seqext.seqcore import BinSpec, Histogram, histogram
from seqext.semm import SemmModel, TrainConfig, extend_semm_batch, train


def main(epochs=10):
    root = np.random.SeedSequence(7)
    data = [gen.gen_poisson(gen.PoissonConfig(1.0, 200.0), s) for s in root.spawn(80)]
    res = train(SemmModel(16, 4, seed=0), data, TrainConfig(epochs=epochs, batch_size=8,
                                                           learning_rate=5e-3, seed=0))
    for h in res.history:
        print(f"epoch {h['epoch']:3d}  train {h['train_loss']:.4f}  val {h['val_loss']:.4f}")
    test = [data[i] for i in res.test_idx]
    ext = extend_semm_batch(res.model, test, 200, 1)
    g = np.concatenate([np.diff(e.sequence.points[e.n_old - 1:]) for e in ext])
    bins = BinSpec(0.0, 5.0, 50)
    target = np.exp(-bins.centers)
    ref = Histogram(bins, target / (target.sum() * bins.width), True)
    print(f"best epoch {res.best_epoch}; mean simulated gap {g.mean():.3f}; "
          f"W1 to exp(-x): {stats.wasserstein1(histogram(g, bins, normalize=True), ref):.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
