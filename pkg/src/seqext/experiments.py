"""Experiment definitions, runner and report digest.

Each experiment writes into ``<out_dir>/<experiment>/``:

- ``sequences/``: input and generated/extended sequence files
- ``*.json`` / ``*.csv``: descriptor histograms and curve tables
- ``metrics.json``: numbers only, byte-identical across reruns with a fixed seed
- ``summary.json``: checks against thresholds, pass/fail, timing

A failing stage writes a summary with ``status: "failed"`` and a ``STALE``
marker so partial outputs are not mistaken for a finished run.
"""
from __future__ import annotations

import csv
import json
import logging
import operator
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import generators as gen
from . import stats
from .rejext import RejectionConfig, extend_rejection
from .seqcore import (BinSpec, Histogram, PointSequence, SeqError, gaps, histogram,
                      histogram_to_csv, histogram_to_json, write_sequence)
from .stats import CurveKind

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXPERIMENT_IDS = (
    "exp1_poisson_rejection",
    "exp2_cue_rejection",
    "exp3_cue_semm",
    "exp4_poisson_semm",
    "exp5_attractive_semm",
    "zeta_case_study",
    "wasserstein_matrix",
)

# desk-scale defaults; PAPER_SCALE entries override them under --paper-scale
DEFAULTS: dict[str, dict] = {
    "exp1_poisson_rejection": {"runs": 100, "mu": 1.0, "window_T": 500.0, "n_new": 500},
    "exp2_cue_rejection": {"runs": 200, "matrix_N": 128, "n_new": 128},
    "exp3_cue_semm": {"n_sequences": 200, "matrix_N": 128, "epochs": 100, "hidden_size": 64,
                      "n_components": 32, "learning_rate": 1e-3, "n_new": 128, "n_simulated": 200},
    "exp4_poisson_semm": {"runs": 5, "n_sequences": 200, "n_obs": 200, "n_new": 200,
                          "semm_epochs": 20, "gru_epochs": 20, "fcnn_epochs": 50,
                          "hidden_size": 64, "n_components": 32},
    "exp5_attractive_semm": {"n_sequences": 40, "mu": 3.5, "window_T": 500.0, "mcmc_sweeps": 200,
                             "epochs": 30, "batch_size": 4, "learning_rate": 3e-3,
                             "hidden_size": 64, "n_components": 32, "n_new": 500},
    "zeta_case_study": {"zeta_path": None, "block_length": 600, "n_train_zeros": 60000,
                        "window_stride": 200, "n_test_blocks": 50, "n_obs": 300,
                        "horizons": [20, 50, 100, 200, 300], "epochs": 15, "learning_rate": 2e-3,
                        "lr_schedule": "cosine", "hidden_size": 64, "n_components": 32,
                        "n_samples": 64},
    "wasserstein_matrix": {"per_class": 10, "window_T": 500.0, "matrix_N": 128, "block_length": 500,
                           "zeta_path": None, "mode": "pairwise"},
}

PAPER_SCALE: dict[str, dict] = {
    "exp1_poisson_rejection": {"runs": 500},
    "exp2_cue_rejection": {"runs": 500, "matrix_N": 500, "n_new": 500},
    "exp3_cue_semm": {"n_sequences": 500, "matrix_N": 500, "epochs": 200, "n_new": 500,
                      "n_simulated": 500},
    "exp4_poisson_semm": {"n_sequences": 500, "n_obs": 500, "n_new": 500, "semm_epochs": 200,
                          "gru_epochs": 200, "fcnn_epochs": 200},
    "exp5_attractive_semm": {"n_sequences": 500, "epochs": 200, "batch_size": 32, "learning_rate": 1e-3},
    "zeta_case_study": {"epochs": 50, "n_samples": 256},
    "wasserstein_matrix": {"per_class": 100},
}

GAP_BINS = BinSpec(0.0, 5.0, 50)
PAIR_BINS = BinSpec(0.0, 3.0, 30)
CUE_GAP_BINS = BinSpec(0.0, 3.0, 30)
TWO_GAP_BINS = BinSpec(0.0, 6.0, 60)


_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    out_dir: str = "runs"
    seed: int = 0
    paper_scale: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise SeqError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENT_IDS)}")
        unknown = set(self.params) - set(DEFAULTS[self.experiment])
        if unknown:
            raise SeqError(f"unknown parameters for {self.experiment}: {sorted(unknown)}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise SeqError("seed must be a non-negative integer")

    def resolved(self) -> dict:
        p = dict(DEFAULTS[self.experiment])
        if self.paper_scale:
            p.update(PAPER_SCALE.get(self.experiment, {}))
        p.update(self.params)
        return p

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "experiment": self.experiment,
                "out_dir": self.out_dir, "seed": self.seed, "paper_scale": self.paper_scale,
                "params": self.resolved()}

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        obj = json.loads(Path(path).read_text())
        ver = obj.get("schema_version", SCHEMA_VERSION)
        if ver != SCHEMA_VERSION:
            raise SeqError(f"{path}: unsupported schema_version {ver}")
        return cls(obj["experiment"], obj.get("out_dir", "runs"), int(obj.get("seed", 0)),
                   bool(obj.get("paper_scale", False)), dict(obj.get("params", {})))


def default_zeta_path() -> Path:
    for cand in (Path("data/zeta_zeros.txt.gz"),
                 Path(__file__).resolve().parents[2] / "data" / "zeta_zeros.txt.gz"):
        if cand.exists():
            return cand
    raise SeqError("zeta zeros file not found; pass zeta_path")


def _ss(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *keys])


# --- output helpers -----------------------------------------------------------

class _Writer:
    def __init__(self, root: Path):
        self.root = root
        (root / "sequences").mkdir(parents=True, exist_ok=True)
        self.metrics: dict = {}
        self.checks: list[dict] = []

    def sequence(self, name: str, seq: PointSequence) -> None:
        write_sequence(seq, self.root / "sequences" / f"{name}.txt")

    def hist(self, name: str, h: Histogram) -> None:
        (self.root / f"{name}.json").write_text(json.dumps(histogram_to_json(h)))
        (self.root / f"{name}.csv").write_text(histogram_to_csv(h))

    def curves(self, name: str, x, **cols) -> None:
        with open(self.root / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", *cols])
            for i, xi in enumerate(x):
                w.writerow([repr(float(xi))] + [repr(float(c[i])) for c in cols.values()])

    def check(self, name: str, value: float, op: str, threshold: float) -> bool:
        ok = bool(_OPS[op](value, threshold))
        self.checks.append({"name": name, "value": float(value), "op": op,
                            "threshold": float(threshold), "passed": ok})
        return ok


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- shared pieces --------------------------------------------------------------

def _mean_gap_hist(seqs, bins) -> Histogram:
    return stats.mean_histogram([histogram(gaps(s).gaps, bins, normalize=True) for s in seqs])


def _mean_paircorr(seqs, bins) -> Histogram:
    return stats.mean_histogram([stats.pair_correlation(s, bins) for s in seqs])


def _two_gap_gap(seqs, gap_bins, two_bins) -> tuple[float, Histogram, Histogram]:
    """W1 between the mean 2-gap histogram and the self-convolved mean gap histogram."""
    conv = stats.self_convolve(_mean_gap_hist(seqs, gap_bins))
    two = stats.mean_histogram([stats.k_gap_distribution(s, 2, two_bins) for s in seqs])
    return stats.wasserstein1(two, conv, rebin=True), two, conv


def _semm(p, seed):
    from .semm import SemmModel
    return SemmModel(p["hidden_size"], p["n_components"], seed=seed)


# --- experiments ------------------------------------------------------------------

def _exp1(p, seed, out: _Writer, stage):
    with stage("generate"):
        inputs = [gen.gen_poisson(gen.PoissonConfig(p["mu"], p["window_T"]), _ss(seed, 1, i))
                  for i in range(p["runs"])]
    with stage("extend"):
        exts = [extend_rejection(s, RejectionConfig(p["n_new"]), _ss(seed, 2, i))
                for i, s in enumerate(inputs)]
    with stage("write sequences"):
        for i, (s, e) in enumerate(zip(inputs, exts)):
            out.sequence(f"input_{i:03d}", s)
            out.sequence(f"extended_{i:03d}", e.sequence)
    with stage("statistics"):
        new = [e.new for e in exts]
        g_in, g_new = _mean_gap_hist(inputs, GAP_BINS), _mean_gap_hist(new, GAP_BINS)
        f_new = _mean_paircorr(new, PAIR_BINS)
        w1 = stats.wasserstein1(g_in, g_new)
        sup_f = stats.sup_deviation(f_new, CurveKind.POISSON_PAIRCORR, 0.2, 3.0)
        bump = stats.sup_deviation(f_new, CurveKind.POISSON_PAIRCORR, 0.8, 1.2)
        # gap range wide enough that the exponential tail survives the convolution
        w2, two, conv = _two_gap_gap(new, BinSpec(0.0, 10.0, 100), BinSpec(0.0, 20.0, 200))
    out.hist("gap_input", g_in)
    out.hist("gap_new", g_new)
    out.hist("paircorr_new", f_new)
    out.curves("paircorr_curves", PAIR_BINS.centers, new=f_new.masses,
               reference=stats.reference_curve(CurveKind.POISSON_PAIRCORR, PAIR_BINS.centers))
    out.curves("two_gap_curves", two.binspec.centers, two_gap=two.masses, self_convolution=conv.masses)
    out.metrics.update({"w1_gap_new_vs_input": w1, "paircorr_sup_dev": sup_f,
                        "paircorr_dev_0.8_1.2": bump, "w1_two_gap_vs_convolution": w2,
                        "gap_rmse_vs_exp": stats.rmse(g_new.masses, np.exp(-GAP_BINS.centers)),
                        "gap_pearson_vs_exp": stats.pearson(g_new.masses, np.exp(-GAP_BINS.centers))})
    out.check("w1_gap_new_vs_input", w1, "<", 0.05)
    out.check("paircorr_sup_dev", sup_f, "<", 0.1)
    out.check("paircorr_dev_0.8_1.2", bump, "<", 0.05)


def _exp2(p, seed, out: _Writer, stage):
    with stage("generate"):
        inputs = [gen.gen_cue(gen.CueConfig(p["matrix_N"]), _ss(seed, 1, i)) for i in range(p["runs"])]
    with stage("extend"):
        exts = [extend_rejection(s, RejectionConfig(p["n_new"]), _ss(seed, 2, i))
                for i, s in enumerate(inputs)]
    with stage("write sequences"):
        for i, (s, e) in enumerate(zip(inputs, exts)):
            out.sequence(f"input_{i:03d}", s)
            out.sequence(f"extended_{i:03d}", e.sequence)
    with stage("statistics"):
        new = [e.new for e in exts]
        f_in, f_new = _mean_paircorr(inputs, PAIR_BINS), _mean_paircorr(new, PAIR_BINS)
        sup_in = stats.sup_deviation(f_in, CurveKind.CUE_PAIRCORR, 0.2, 3.0)
        bump = stats.sup_deviation(f_new, CurveKind.CUE_PAIRCORR, 0.8, 1.2)
        w_new, two_new, conv_new = _two_gap_gap(new, CUE_GAP_BINS, TWO_GAP_BINS)
        w_in, two_in, conv_in = _two_gap_gap(inputs, CUE_GAP_BINS, TWO_GAP_BINS)
    out.hist("paircorr_input", f_in)
    out.hist("paircorr_new", f_new)
    out.hist("gap_input", _mean_gap_hist(inputs, CUE_GAP_BINS))
    out.hist("gap_new", _mean_gap_hist(new, CUE_GAP_BINS))
    out.curves("paircorr_curves", PAIR_BINS.centers, input=f_in.masses, new=f_new.masses,
               reference=stats.reference_curve(CurveKind.CUE_PAIRCORR, PAIR_BINS.centers))
    out.curves("two_gap_curves", TWO_GAP_BINS.centers, two_gap_new=two_new.masses,
               convolution_new=conv_new.masses, two_gap_input=two_in.masses,
               convolution_input=conv_in.masses)
    out.metrics.update({"paircorr_input_sup_dev": sup_in, "bump_dev_0.8_1.2": bump,
                        "w1_two_gap_vs_convolution_new": w_new,
                        "w1_two_gap_vs_convolution_input": w_in,
                        "paircorr_rmse_new": stats.rmse(f_new.masses, stats.reference_curve(
                            CurveKind.CUE_PAIRCORR, PAIR_BINS.centers))})
    out.check("paircorr_input_sup_dev", sup_in, "<", 0.1)
    out.check("bump_dev_0.8_1.2", bump, ">", 0.05)
    out.check("w1_two_gap_vs_convolution_new", w_new, "<", 0.05)
    out.check("two_gap_contrast_ratio", w_in / max(w_new, 1e-300), ">=", 2.0)


def _exp3(p, seed, out: _Writer, stage):
    from .semm import TrainConfig, extend_semm_batch, save_model, train
    with stage("generate"):
        data = [gen.gen_cue(gen.CueConfig(p["matrix_N"]), _ss(seed, 1, i)) for i in range(p["n_sequences"])]
    snapshots = {}
    with stage("train"):
        cfg = TrainConfig(epochs=p["epochs"], learning_rate=p["learning_rate"], seed=seed)
        res = train(_semm(p, seed), data, cfg,
                    on_epoch=lambda ep, m: snapshots.setdefault(ep, m.copy()) if ep == 1 else None)
        save_model(res.model, out.root / "model.json", {"train_config": cfg.to_dict()})
    with stage("simulate"):
        test = [data[i] for i in res.test_idx] or data
        seqs = [test[i % len(test)] for i in range(p["n_simulated"])]
        sims = {}
        for name, model, key in (("trained", res.model, 3), ("epoch1", snapshots[1], 4)):
            ext = extend_semm_batch(model, seqs, p["n_new"], _ss(seed, key))
            sims[name] = [e.new for e in ext]
        for i, s in enumerate(sims["trained"][:20]):
            out.sequence(f"simulated_{i:03d}", s)
    with stage("statistics"):
        f = {k: _mean_paircorr(v, PAIR_BINS) for k, v in sims.items()}
        dev = {k: stats.sup_deviation(h, CurveKind.CUE_PAIRCORR, 0.2, 3.0) for k, h in f.items()}
    out.hist("paircorr_simulated", f["trained"])
    out.curves("paircorr_curves", PAIR_BINS.centers, trained=f["trained"].masses,
               epoch1=f["epoch1"].masses,
               reference=stats.reference_curve(CurveKind.CUE_PAIRCORR, PAIR_BINS.centers))
    out.curves("loss_history", [h["epoch"] for h in res.history],
               train=[h["train_loss"] for h in res.history], val=[h["val_loss"] for h in res.history])
    out.metrics.update({"paircorr_sup_dev_trained": dev["trained"], "paircorr_sup_dev_epoch1": dev["epoch1"],
                        "best_epoch": res.best_epoch})
    out.check("paircorr_sup_dev_trained", dev["trained"], "<=", 0.15)
    out.check("trained_minus_epoch1_dev", dev["trained"] - dev["epoch1"], "<", 0.0)


def poisson_table_run(p: dict, seed: int, run: int) -> dict:
    """One seeded comparison of SEMM, direct GRU and FCNN on Poisson data.

    Returns per-model gap-histogram scores of simulated continuations versus
    the held-out true continuations, plus the pooled simulated gaps.
    """
    from .semm import (BaselineConfig, FcnnBaseline, GruDirectBaseline, TrainConfig,
                       extend_semm_batch, gap_histogram_scores, terms_rmse, train)
    n_obs, n_new = p["n_obs"], p["n_new"]
    rs = 1000 * seed + run
    seqs = []
    for i in range(p["n_sequences"]):
        s = gen.gen_poisson(gen.PoissonConfig(1.0, 2.0 * (n_obs + n_new) + 50.0), _ss(rs, 1, i))
        if len(s) < n_obs + n_new + 1:
            raise SeqError("generated Poisson window too short for n_obs + n_new")
        seqs.append(s.points[:n_obs + n_new + 1])
    perm = np.random.default_rng(_ss(rs, 2)).permutation(len(seqs))
    n_test = max(1, int(round(0.15 * len(seqs))))
    te, tr = perm[:n_test], perm[n_test:]
    obs = [PointSequence(seqs[i][:n_obs + 1], seqs[i][n_obs]) for i in te]
    true_pos = [seqs[i][n_obs + 1:] for i in te]
    true_gaps = [np.diff(seqs[i][n_obs:]) for i in te]
    train_obs = [PointSequence(seqs[i][:n_obs + 1], seqs[i][n_obs]) for i in tr]

    res = train(_semm(p, rs), train_obs,
                TrainConfig(epochs=p["semm_epochs"], seed=rs, split=(0.85, 0.15, 0.0)))
    ext = extend_semm_batch(res.model, obs, n_new, _ss(rs, 3))
    semm_pos = [e.sequence.points[n_obs + 1:] for e in ext]

    gru = GruDirectBaseline(p["hidden_size"], seed=rs)
    gru.fit([np.diff(seqs[i][:n_obs + 1]) for i in tr], BaselineConfig(epochs=p["gru_epochs"], seed=rs))
    gru_gaps = gru.simulate(obs, n_new, _ss(rs, 4))
    gru_pos = [o.points[-1] + np.cumsum(g) for o, g in zip(obs, gru_gaps)]

    fcnn = FcnnBaseline(n_obs, n_new, seed=rs)
    fcnn.fit([seqs[i][1:] for i in tr], BaselineConfig(epochs=p["fcnn_epochs"], seed=rs))
    fcnn_pos = list(fcnn.simulate(np.array([seqs[i][1:n_obs + 1] for i in te]), _ss(rs, 5)))

    out = {}
    for name, pos in (("semm", semm_pos), ("gru_direct", gru_pos), ("fcnn", fcnn_pos)):
        g = [np.diff(np.concatenate(([o.points[-1]], x))) for o, x in zip(obs, pos)]
        sc = gap_histogram_scores(g, true_gaps, GAP_BINS)
        sc["terms_rmse"] = terms_rmse(pos, true_pos)
        sc["gaps"] = np.concatenate(g)
        out[name] = sc
    return out


def _exp4(p, seed, out: _Writer, stage):
    rows, pooled = [], None
    for run in range(p["runs"]):
        with stage(f"run {run}"):
            r = poisson_table_run(p, seed, run)
        if pooled is None:
            pooled = r["semm"]["gaps"]
        rows.append({m: {k: v for k, v in sc.items() if k != "gaps"} for m, sc in r.items()})
    ordered = sum(r["semm"]["rmse"] < r["gru_direct"]["rmse"] < r["fcnn"]["rmse"] for r in rows)
    pear = float(np.mean([r["semm"]["pearson"] for r in rows]))
    sim = histogram(pooled, GAP_BINS, normalize=True)
    ref = Histogram(GAP_BINS, np.exp(-GAP_BINS.centers) / (np.exp(-GAP_BINS.centers).sum() * GAP_BINS.width), True)
    w1 = stats.wasserstein1(sim, ref)
    out.hist("gap_semm_simulated", sim)
    out.curves("gap_curves", GAP_BINS.centers, semm=sim.masses, reference=ref.masses)
    table = {m: {k: float(np.mean([r[m][k] for r in rows])) for k in ("rmse", "pearson", "terms_rmse")}
             for m in ("semm", "gru_direct", "fcnn")}
    for m in table:
        table[m]["rmse_sd"] = float(np.std([r[m]["rmse"] for r in rows]))
        table[m]["pearson_sd"] = float(np.std([r[m]["pearson"] for r in rows]))
    out.metrics.update({"runs": rows, "table": table, "ordering_count": int(ordered),
                        "semm_pearson": pear, "w1_semm_gap_vs_exp": w1})
    out.check("ordering_semm_gru_fcnn_runs", ordered, ">=", min(4, p["runs"]))
    out.check("semm_pearson", pear, ">", 0.8)
    out.check("w1_semm_gap_vs_exp", w1, "<", 0.1)


def _exp5(p, seed, out: _Writer, stage):
    from .semm import TrainConfig, extend_semm_batch, save_model, train
    gcfg = gen.GibbsConfig(p["mu"], p["window_T"], p["mcmc_sweeps"])
    with stage("generate"):
        data = [gen.gen_gibbs_attractive(gcfg, _ss(seed, 1, i)) for i in range(p["n_sequences"])]
    with stage("train"):
        # small batches: at desk scale a batch of 32 would be one step per epoch
        cfg = TrainConfig(epochs=p["epochs"], batch_size=p["batch_size"],
                          learning_rate=p["learning_rate"], seed=seed)
        res = train(_semm(p, seed), data, cfg)
        save_model(res.model, out.root / "model.json", {"train_config": cfg.to_dict()})
    with stage("simulate"):
        test = [data[i] for i in res.test_idx] or data
        ext = extend_semm_batch(res.model, test, p["n_new"], _ss(seed, 3))
        new = [e.new for e in ext]
        for i, e in enumerate(ext):
            out.sequence(f"extended_{i:03d}", e.sequence)
    with stage("statistics"):
        g_in, g_new = _mean_gap_hist(test, GAP_BINS), _mean_gap_hist(new, GAP_BINS)
        w1 = stats.wasserstein1(g_in, g_new)
        f_in, f_new = _mean_paircorr(test, PAIR_BINS), _mean_paircorr(new, PAIR_BINS)
    out.hist("gap_input", g_in)
    out.hist("gap_new", g_new)
    out.curves("paircorr_curves", PAIR_BINS.centers, input=f_in.masses, new=f_new.masses)
    out.metrics.update({"w1_gap_new_vs_input": w1,
                        "paircorr_rmse_new_vs_input": stats.rmse(f_in.masses, f_new.masses),
                        "best_epoch": res.best_epoch})
    out.check("w1_gap_new_vs_input", w1, "<", 0.1)


def zeta_blocks(p: dict):
    """(training windows, test blocks) of unfolded zeros.

    Training windows overlap (stride ``window_stride``) and come from the
    first ``n_train_zeros`` zeros; test blocks are disjoint and come after.
    """
    z = gen.load_zeta_zeros(p["zeta_path"] or default_zeta_path())
    L, n_tr = p["block_length"], p["n_train_zeros"]
    if z.size < n_tr + L * p["n_test_blocks"]:
        raise SeqError(f"need {n_tr + L * p['n_test_blocks']} zeros, file has {z.size}")
    train_w = [b for o in range(0, L, p["window_stride"]) for b in gen.unfold_zeta(z[o:n_tr], L)]
    test = gen.unfold_zeta(z[n_tr:], L)[:p["n_test_blocks"]]
    return train_w, test


def _zeta(p, seed, out: _Writer, stage):
    from .semm import TrainConfig, forecast_semm, save_model, train
    with stage("load zeros"):
        train_w, test = zeta_blocks(p)
    n_obs = p["n_obs"]
    H = int(max(p["horizons"]))
    if n_obs + H > p["block_length"]:
        raise SeqError("n_obs + max horizon exceeds block_length")
    with stage("train"):
        cfg = TrainConfig(epochs=p["epochs"], learning_rate=p["learning_rate"], seed=seed,
                          lr_schedule=p["lr_schedule"], split=(0.85, 0.15, 0.0))
        res = train(_semm(p, seed), train_w, cfg)
        save_model(res.model, out.root / "model.json", {"train_config": cfg.to_dict()})
    with stage("forecast"):
        obs = [PointSequence(b.points[:n_obs]) for b in test]
        truth = np.array([b.points[n_obs:n_obs + H] for b in test])
        fc = np.array(forecast_semm(res.model, obs, H, p["n_samples"], _ss(seed, 3)))
        mae = np.abs(fc - truth).mean(axis=0)
    for i in range(min(10, len(test))):
        out.sequence(f"test_block_{i:03d}", test[i])
    hs = [int(h) for h in p["horizons"]]
    out.curves("error_vs_horizon", hs, mae=[mae[h - 1] for h in hs])
    out.curves("error_all_horizons", np.arange(1, H + 1), mae=mae)
    ratio = mae[H - 1] / mae[min(hs) - 1]
    out.metrics.update({"mae_by_horizon": {str(h): float(mae[h - 1]) for h in hs},
                        "mae_ratio_max_vs_min_horizon": float(ratio),
                        "best_epoch": res.best_epoch})
    out.check(f"mae_h{H}_over_mae_h{min(hs)}", ratio, "<=", 2.0)


def _wmatrix(p, seed, out: _Writer, stage):
    n = p["per_class"]
    with stage("generate"):
        z = gen.load_zeta_zeros(p["zeta_path"] or default_zeta_path())
        blocks = gen.unfold_zeta(z, p["block_length"])
        if len(blocks) < n:
            raise SeqError(f"only {len(blocks)} zeta blocks available, need {n}")
        data = {
            "poisson": [gen.gen_poisson(gen.PoissonConfig(1.0, p["window_T"]), _ss(seed, 1, i)) for i in range(n)],
            "cue": [gen.gen_cue(gen.CueConfig(p["matrix_N"]), _ss(seed, 2, i)) for i in range(n)],
            "zeta": blocks[:n],
            "attractive": [gen.gen_gibbs_attractive(gen.GibbsConfig(window_T=p["window_T"]), _ss(seed, 3, i))
                           for i in range(n)],
        }
    bins = BinSpec(0.0, 4.0, 40)
    with stage("statistics"):
        hists = {k: [stats.gap_distribution(s, bins) for s in v] for k, v in data.items()}
        m = stats.wasserstein_matrix(hists, p["mode"])
    for k, v in data.items():
        out.sequence(f"{k}_000", v[0])
        out.hist(f"gap_{k}", stats.mean_histogram([h.normalize() for h in hists[k]]))
    with open(out.root / "distance_matrix.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["", *m.labels])
        for lab, row in zip(m.labels, m.values):
            w.writerow([lab, *[repr(float(x)) for x in row]])
    out.metrics.update({"labels": list(m.labels), "matrix": m.values.tolist()})
    out.check("d(cue,zeta) - d(cue,attractive)", m["cue", "zeta"] - m["cue", "attractive"], "<", 0.0)
    out.check("d(cue,zeta) - d(poisson,attractive)", m["cue", "zeta"] - m["poisson", "attractive"], "<", 0.0)


RUNNERS = {
    "exp1_poisson_rejection": _exp1,
    "exp2_cue_rejection": _exp2,
    "exp3_cue_semm": _exp3,
    "exp4_poisson_semm": _exp4,
    "exp5_attractive_semm": _exp5,
    "zeta_case_study": _zeta,
    "wasserstein_matrix": _wmatrix,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run one experiment and write its report bundle; returns the summary dict."""
    root = Path(cfg.out_dir) / cfg.experiment
    root.mkdir(parents=True, exist_ok=True)
    stale = root / "STALE"
    stale.write_text("run in progress or failed; outputs may be partial\n")
    out = _Writer(root)
    p = cfg.resolved()
    summary = {"experiment": cfg.experiment, "config": cfg.to_dict(), "status": "running"}
    t0 = time.perf_counter()

    @contextmanager
    def stage(name):
        log.info("%s: %s", cfg.experiment, name)
        try:
            yield
        except ExperimentError:
            raise
        except Exception as e:
            summary.update(status="failed", stage=name, error=f"{type(e).__name__}: {e}",
                           passed=False, checks=out.checks)
            _json_dump(summary, root / "summary.json")
            raise ExperimentError(f"{cfg.experiment}: stage '{name}' failed: {e}") from e

    with stage("run"):
        RUNNERS[cfg.experiment](p, cfg.seed, out, stage)
        _json_dump(out.metrics, root / "metrics.json")
    summary.update(status="complete", checks=out.checks,
                   passed=all(c["passed"] for c in out.checks),
                   runtime_seconds=round(time.perf_counter() - t0, 3))
    _json_dump(summary, root / "summary.json")
    stale.unlink()
    return summary


def load_summaries(directory) -> list[dict]:
    d = Path(directory)
    files = sorted(d.rglob("summary.json")) if d.is_dir() else []
    if not files:
        raise SeqError(f"no summaries found under {directory}")
    out = []
    for f in files:
        try:
            s = json.loads(f.read_text())
            s["checks"], s["experiment"]  # noqa: B018 - required keys
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise SeqError(f"{f}: corrupt summary ({e})") from None
        s["_path"] = str(f)
        out.append(s)
    return out


def report(directory) -> tuple[str, int]:
    """Digest table over all summaries below ``directory`` and an exit code (1 on any failure)."""
    rows = []
    failed = []
    for s in load_summaries(directory):
        if s.get("status") != "complete":
            failed.append(f"{s['experiment']}: {s.get('status')} at stage {s.get('stage')}")
            rows.append((s["experiment"], "-", "-", "-", "FAIL"))
        for c in s["checks"]:
            mark = "pass" if c["passed"] else "FAIL"
            if not c["passed"]:
                failed.append(f"{s['experiment']}: {c['name']}")
            rows.append((s["experiment"], c["name"], f"{c['value']:.4g}", f"{c['op']} {c['threshold']:g}", mark))
    head = ("experiment", "check", "value", "threshold", "result")
    widths = [max(len(str(r[i])) for r in rows + [head]) for i in range(5)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*head), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*r) for r in rows]
    if failed:
        lines.append("")
        lines += [f"FAILED: {f}" for f in failed]
    return "\n".join(lines), (1 if failed else 0)
