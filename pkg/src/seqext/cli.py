"""Command-line entry point: ``seqext <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import generators as gen
from . import stats
from .rejext import RejectionConfig, extend_rejection
from .seqcore import (BinSpec, SeqError, histogram, histogram_to_csv, histogram_to_json,
                      gaps, read_sequence, write_sequence)


def _ss(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *keys])


def _load_config(path) -> dict:
    if path is None:
        return {}
    obj = json.loads(Path(path).read_text())
    ver = obj.get("schema_version", ex.SCHEMA_VERSION)
    if ver != ex.SCHEMA_VERSION:
        raise SeqError(f"{path}: unsupported schema_version {ver}")
    return obj


def _merged(args, keys) -> dict:
    """Config-file values overridden by explicitly given flags."""
    cfg = _load_config(args.config).get("params", {})
    cfg = {k: v for k, v in cfg.items() if k in keys}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_generate(args) -> int:
    keys = ("process", "count", "mu", "window_T", "rate_slope", "matrix_N", "method",
            "mcmc_sweeps", "zeta_path", "block_length")
    p = _merged(args, keys)
    process = p.get("process", "poisson")
    count = int(p.get("count", 1))
    out = _out_dir(args)
    if process == "zeta":
        z = gen.load_zeta_zeros(p.get("zeta_path") or ex.default_zeta_path())
        seqs = gen.unfold_zeta(z, int(p.get("block_length", 500)))[:count]
    else:
        seqs = []
        for i in range(count):
            ss = _ss(args.seed, i)
            if process in ("poisson", "poisson-ns"):
                c = gen.PoissonConfig(p.get("mu", 1.0), p.get("window_T", 500.0),
                                      p.get("rate_slope", 0.002 if process == "poisson-ns" else 0.0))
                seqs.append(gen.gen_poisson(c, ss) if process == "poisson" else gen.gen_poisson_nonstationary(c, ss))
            elif process == "cue":
                seqs.append(gen.gen_cue(gen.CueConfig(p.get("matrix_N", 128), p.get("method", "eig"),
                                                      p.get("mcmc_sweeps", 400)), ss))
            elif process == "gibbs":
                seqs.append(gen.gen_gibbs_attractive(gen.GibbsConfig(p.get("mu", 3.5), p.get("window_T", 500.0),
                                                                     p.get("mcmc_sweeps", 200)), ss))
            else:
                raise SeqError(f"unknown process {process!r}")
    for i, s in enumerate(seqs):
        write_sequence(s, out / f"{process}_{i:04d}.txt")
    print(f"wrote {len(seqs)} sequences to {out}")
    return 0


def cmd_stats(args) -> int:
    seqs = [read_sequence(f) for f in args.files]
    bins = BinSpec(args.lo, args.hi, args.bins)
    if args.descriptor == "gap":
        hs = [histogram(gaps(s).gaps, bins, normalize=True) for s in seqs]
    elif args.descriptor == "paircorr":
        hs = [stats.pair_correlation(s, bins) for s in seqs]
    elif args.descriptor == "kgap":
        hs = [stats.k_gap_distribution(s, args.k, bins) for s in seqs]
    else:
        raise SeqError(f"unknown descriptor {args.descriptor!r}")
    h = stats.mean_histogram(hs)
    out = _out_dir(args)
    name = args.descriptor if args.descriptor != "kgap" else f"kgap{args.k}"
    (out / f"{name}.json").write_text(json.dumps(histogram_to_json(h)))
    (out / f"{name}.csv").write_text(histogram_to_csv(h))
    if args.reference:
        dev = stats.sup_deviation(h, args.reference)
        print(f"sup deviation from {args.reference}: {dev:.6g}")
    print(f"wrote {out / name}.json and .csv from {len(seqs)} sequences")
    return 0


def cmd_extend(args) -> int:
    seqs = [read_sequence(f) for f in args.files]
    out = _out_dir(args)
    if args.method == "rejection":
        exts = [extend_rejection(s, RejectionConfig(args.n_new), _ss(args.seed, i)) for i, s in enumerate(seqs)]
    else:
        from .semm import extend_semm_batch, load_model
        if not args.model:
            raise SeqError("--method semm needs --model <checkpoint>")
        exts = extend_semm_batch(load_model(args.model), seqs, args.n_new, args.seed)
    for f, e in zip(args.files, exts):
        write_sequence(e.sequence, out / f"{Path(f).stem}_extended.txt")
    meta = {"method": args.method, "seed": args.seed, "n_new": args.n_new,
            "n_old": [e.n_old for e in exts], "inputs": [str(f) for f in args.files]}
    (out / "extension.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"extended {len(exts)} sequences into {out}")
    return 0


def cmd_train(args) -> int:
    from .semm import SemmModel, TrainConfig, save_model, train
    keys = ("epochs", "batch_size", "learning_rate", "hidden_size", "n_components", "n_layers")
    p = _merged(args, keys)
    data = [read_sequence(f) for f in args.files]
    cfg = TrainConfig(epochs=p.get("epochs", 100), batch_size=p.get("batch_size", 32),
                      learning_rate=p.get("learning_rate", 1e-3), seed=args.seed)
    model = SemmModel(p.get("hidden_size", 64), p.get("n_components", 32), p.get("n_layers", 1), seed=args.seed)
    res = train(model, data, cfg)
    out = _out_dir(args)
    save_model(res.model, out / "model.json", {"train_config": cfg.to_dict(), "best_epoch": res.best_epoch})
    (out / "history.json").write_text(json.dumps(res.history, indent=2) + "\n")
    print(f"best epoch {res.best_epoch}, val loss {res.history[res.best_epoch - 1]['val_loss']:.6f}; "
          f"model written to {out / 'model.json'}")
    return 0


def cmd_evaluate(args) -> int:
    from .semm import gap_histogram_scores, load_model, nll
    from .autodiff import no_tape
    pred = [read_sequence(f) for f in args.files]
    metrics = {}
    bins = BinSpec(args.lo, args.hi, args.bins)
    if args.truth:
        truth = [read_sequence(f) for f in args.truth]
        if len(truth) != len(pred):
            raise SeqError("--truth needs as many files as predictions")
        metrics["gap_histogram"] = gap_histogram_scores([gaps(s).gaps for s in pred],
                                                        [gaps(s).gaps for s in truth], bins)
        a = stats.mean_histogram([histogram(gaps(s).gaps, bins, normalize=True) for s in pred])
        b = stats.mean_histogram([histogram(gaps(s).gaps, bins, normalize=True) for s in truth])
        metrics["w1_mean_gap_histogram"] = stats.wasserstein1(a, b)
    if args.model:
        with no_tape():
            metrics["nll"] = float(nll(load_model(args.model), pred).data)
    if not metrics:
        raise SeqError("nothing to evaluate: pass --truth and/or --model")
    text = json.dumps(metrics, indent=2, sort_keys=True)
    out = _out_dir(args)
    (out / "metrics.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_report(args) -> int:
    table, code = ex.report(args.directory)
    print(table)
    return code


def cmd_run(args) -> int:
    file_cfg = _load_config(args.config)
    experiment = args.experiment or file_cfg.get("experiment")
    if not experiment:
        raise SeqError("name an experiment or pass --config with an 'experiment' field")
    params = dict(file_cfg.get("params", {}))
    for item in args.set or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise SeqError(f"--set expects key=value, got {item!r}")
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    seed = args.seed if args.seed_given else int(file_cfg.get("seed", args.seed))
    out = args.out if args.out_given else file_cfg.get("out_dir", args.out)
    paper = args.paper_scale or bool(file_cfg.get("paper_scale", False))
    cfg = ex.ExperimentConfig(experiment, out, seed, paper, params)
    s = ex.run_experiment(cfg)
    for c in s["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']:.6g} {c['op']} {c['threshold']:g}")
    print(f"{experiment}: {'passed' if s['passed'] else 'FAILED'} in {s['runtime_seconds']:.1f}s; outputs in "
          f"{Path(out) / experiment}")
    return 0 if s["passed"] else 1


class _Tracked(argparse.Action):
    # records whether a flag was given explicitly, so config values can fill in the rest
    def __call__(self, parser, ns, values, option_string=None):
        setattr(ns, self.dest, values)
        setattr(ns, f"{self.dest}_given", True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqext", description="Point-sequence generation, statistics and extension.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default="out"):
        p.add_argument("--config", help="JSON config file (schema_version 1)")
        p.add_argument("--seed", type=int, default=0, action=_Tracked)
        p.add_argument("--out", default=out_default, action=_Tracked, help="output directory")
        p.add_argument("--paper-scale", action="store_true", help="use paper-scale sizes")
        p.set_defaults(seed_given=False, out_given=False)

    p = sub.add_parser("generate", help="sample sequences from a point process")
    common(p)
    p.add_argument("--process", choices=["poisson", "poisson-ns", "cue", "gibbs", "zeta"])
    p.add_argument("--count", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--window-T", dest="window_T", type=float)
    p.add_argument("--rate-slope", dest="rate_slope", type=float)
    p.add_argument("--matrix-N", dest="matrix_N", type=int)
    p.add_argument("--method", choices=["eig", "mcmc"])
    p.add_argument("--mcmc-sweeps", dest="mcmc_sweeps", type=int)
    p.add_argument("--zeta-path", dest="zeta_path")
    p.add_argument("--block-length", dest="block_length", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="mean descriptor histogram over sequence files")
    common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--descriptor", choices=["gap", "paircorr", "kgap"], default="gap")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=5.0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--reference", choices=[k.value for k in stats.CurveKind])
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("extend", help="extend sequences by rejection sampling or a trained model")
    common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--method", choices=["rejection", "semm"], default="rejection")
    p.add_argument("--model", help="model checkpoint (for --method semm)")
    p.add_argument("--n-new", dest="n_new", type=int, default=500)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("train", help="train a mixture model on sequence files")
    common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--hidden-size", dest="hidden_size", type=int)
    p.add_argument("--n-components", dest="n_components", type=int)
    p.add_argument("--n-layers", dest="n_layers", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score predicted sequences against truth and/or a model")
    common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--truth", nargs="+")
    p.add_argument("--model")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=5.0)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="digest of experiment summaries; exit 1 if any check failed")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run a full experiment")
    common(p, out_default="runs")
    p.add_argument("experiment", nargs="?", choices=ex.EXPERIMENT_IDS)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override an experiment parameter")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "paper_scale", False) and args.command != "run":
        logging.getLogger(__name__).warning("--paper-scale only affects the 'run' subcommand")
    try:
        return args.func(args)
    except (SeqError, ex.ExperimentError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
