import numpy as np
import pytest

from seqext import generators as gen
from seqext.seqcore import PointSequence, SeqError
from seqext.semm import BaselineConfig, FcnnBaseline, GruDirectBaseline


def _walks(n, length, seed=0):
    rng = np.random.default_rng(seed)
    return [np.cumsum(rng.exponential(size=length)) for _ in range(n)]


def test_fcnn_zero_init_predicts_zero_offsets():
    net = FcnnBaseline(20, 10, 16, init="zeros")
    obs = np.array(_walks(3, 20))
    out = net.predict(obs)
    # zero net output means every future position equals the last observed one
    np.testing.assert_array_equal(out, np.repeat(obs[:, -1:], 10, axis=1))
    with pytest.raises(SeqError):
        net._features(np.ones((1, 7)))


def test_fcnn_overfits_single_example():
    # desk-scale widths; the full 500/512 net passes too but takes minutes
    net = FcnnBaseline(50, 50, 64, seed=0)
    seq = _walks(1, 100, seed=3)
    hist = net.fit(seq, BaselineConfig(epochs=2000, batch_size=1, learning_rate=1e-3))
    assert hist[-1] < 1e-3


def test_fcnn_window_mismatch():
    net = FcnnBaseline(20, 10, 8)
    with pytest.raises(SeqError, match="window width mismatch"):
        net.predict(np.ones((2, 19)))
    with pytest.raises(SeqError):
        net.fit(_walks(2, 25), BaselineConfig(epochs=1))


def test_fcnn_deterministic_and_simulate():
    data = _walks(8, 30, seed=1)
    nets = [FcnnBaseline(20, 10, 8, seed=4) for _ in range(2)]
    for n in nets:
        n.fit(data, BaselineConfig(epochs=3, batch_size=4, seed=2))
    obs = np.array([d[:20] for d in data])
    np.testing.assert_array_equal(nets[0].predict(obs), nets[1].predict(obs))
    np.testing.assert_array_equal(nets[0].simulate(obs, 5), nets[1].simulate(obs, 5))
    assert nets[0].residual_sd.shape == (10,)


def test_gru_direct_constant_gap():
    data = [np.full(40, 0.7) for _ in range(16)]
    m = GruDirectBaseline(8, seed=0)
    m.fit(data, BaselineConfig(epochs=40, batch_size=8, learning_rate=1e-2))
    pred = m.predict([PointSequence(np.cumsum(np.full(30, 0.7)))], 20)
    assert np.max(np.abs(pred / 0.7 - 1)) < 0.01


def test_gru_direct_deterministic():
    data = [gen.gen_poisson(gen.PoissonConfig(1.0, 40.0), i) for i in range(10)]
    outs = []
    for _ in range(2):
        m = GruDirectBaseline(6, seed=3)
        m.fit(data, BaselineConfig(epochs=2, batch_size=5, seed=1))
        outs.append((m.predict(data[:3], 5), m.simulate(data[:3], 5, 9)))
    np.testing.assert_array_equal(outs[0][0], outs[1][0])
    np.testing.assert_array_equal(outs[0][1], outs[1][1])
    assert outs[0][0].shape == (3, 5)
