import json

import numpy as np
import pytest

from seqext import experiments as ex
from seqext.cli import main
from seqext.seqcore import SeqError, read_sequence

TINY = ["--set", "runs=3", "--set", "window_T=100", "--set", "n_new=100"]


def _run(tmp_path, *extra, seed="0"):
    return main(["run", "exp1_poisson_rejection", "--out", str(tmp_path), "--seed", seed, *TINY, *extra])


def test_run_emits_bundle(tmp_path):
    code = _run(tmp_path)
    d = tmp_path / "exp1_poisson_rejection"
    assert code in (0, 1)
    summary = json.loads((d / "summary.json").read_text())
    assert summary["status"] == "complete"
    assert {"name", "value", "op", "threshold", "passed"} <= set(summary["checks"][0])
    assert summary["config"]["params"]["runs"] == 3
    assert (d / "metrics.json").exists()
    assert not (d / "STALE").exists()
    assert list(d.rglob("*.txt")) and list(d.rglob("*.csv"))


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "exp1_poisson_rejection", "--out", str(a), *TINY])
    main(["run", "exp1_poisson_rejection", "--out", str(b), *TINY])
    da, db = a / "exp1_poisson_rejection", b / "exp1_poisson_rejection"
    files = sorted(str(p.relative_to(da)) for p in da.rglob("*") if p.is_file() and p.name != "summary.json")
    assert files == sorted(str(p.relative_to(db)) for p in db.rglob("*") if p.is_file() and p.name != "summary.json")
    assert any(f.endswith(".txt") for f in files)
    for name in files:
        assert (da / name).read_bytes() == (db / name).read_bytes(), name


def test_seed_changes_outputs(tmp_path):
    _run(tmp_path / "a", seed="0")
    _run(tmp_path / "b", seed="1")
    m = [(tmp_path / s / "exp1_poisson_rejection" / "metrics.json").read_bytes() for s in "ab"]
    assert m[0] != m[1]


def test_config_file_and_set_override(tmp_path):
    cfg = {"schema_version": 1, "experiment": "exp1_poisson_rejection", "seed": 4,
           "out_dir": str(tmp_path / "c"), "params": {"runs": 2, "window_T": 80.0, "n_new": 50}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    main(["run", "--config", str(path), "--set", "n_new=60"])
    s = json.loads((tmp_path / "c" / "exp1_poisson_rejection" / "summary.json").read_text())
    assert s["config"]["seed"] == 4
    assert s["config"]["params"]["n_new"] == 60 and s["config"]["params"]["runs"] == 2


def test_bad_config_and_params(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"schema_version": 99, "experiment": "exp1_poisson_rejection"}))
    assert main(["run", "--config", str(path)]) == 2
    assert main(["run", "exp1_poisson_rejection", "--set", "bogus=1", "--out", str(tmp_path)]) == 2
    assert main(["run", "exp1_poisson_rejection", "--set", "runs", "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SeqError):
        ex.ExperimentConfig("exp9")


def test_stage_failure_leaves_stale_marker(tmp_path):
    code = main(["run", "zeta_case_study", "--out", str(tmp_path), "--set", "zeta_path=\"/nonexistent.txt\""])
    assert code == 2
    d = tmp_path / "zeta_case_study"
    s = json.loads((d / "summary.json").read_text())
    assert s["status"] == "failed" and s["stage"]
    assert (d / "STALE").exists()


def _summary(d, name, passed):
    d.mkdir(parents=True)
    s = {"experiment": name, "status": "complete", "passed": passed,
         "checks": [{"name": "c", "value": 0.5, "op": "<", "threshold": 1.0 if passed else 0.1,
                     "passed": passed}]}
    (d / "summary.json").write_text(json.dumps(s))


def test_report_exit_codes(tmp_path, capsys):
    assert main(["report", str(tmp_path / "empty")]) == 2
    _summary(tmp_path / "r" / "x", "exp1_poisson_rejection", True)
    assert main(["report", str(tmp_path / "r")]) == 0
    _summary(tmp_path / "r" / "y", "exp2_cue_rejection", False)
    assert main(["report", str(tmp_path / "r")]) == 1
    assert "FAILED: exp2_cue_rejection: c" in capsys.readouterr().out
    (tmp_path / "r" / "z").mkdir()
    (tmp_path / "r" / "z" / "summary.json").write_text("{broken")
    assert main(["report", str(tmp_path / "r")]) == 2


def test_generate_stats_extend_evaluate(tmp_path, capsys):
    g = tmp_path / "gen"
    assert main(["generate", "--process", "poisson", "--count", "3", "--window-T", "60",
                 "--out", str(g), "--seed", "2"]) == 0
    files = sorted(str(p) for p in g.glob("*.txt"))
    assert len(files) == 3
    st = tmp_path / "st"
    assert main(["stats", *files, "--descriptor", "gap", "--reference", "poisson_gap", "--out", str(st)]) == 0
    h = json.loads((st / "gap.json").read_text())
    assert len(h["masses"]) == 50
    assert main(["stats", *files, "--descriptor", "kgap", "--k", "3", "--hi", "10", "--out", str(st)]) == 0
    assert (st / "kgap3.csv").exists()
    e = tmp_path / "ext"
    assert main(["extend", *files, "--n-new", "20", "--out", str(e)]) == 0
    ext = sorted(e.glob("*_extended.txt"))
    assert len(ext) == 3
    for f, x in zip(files, ext):
        assert len(read_sequence(x)) == len(read_sequence(f)) + 20
    meta = json.loads((e / "extension.json").read_text())
    assert meta["n_new"] == 20
    ev = tmp_path / "ev"
    assert main(["evaluate", *map(str, ext), "--truth", *files, "--out", str(ev)]) == 0
    m = json.loads((ev / "metrics.json").read_text())
    assert {"gap_histogram", "w1_mean_gap_histogram"} <= set(m)
    assert main(["evaluate", *files, "--out", str(ev)]) == 2


def test_train_and_semm_extend(tmp_path):
    g = tmp_path / "gen"
    main(["generate", "--process", "poisson", "--count", "6", "--window-T", "40", "--out", str(g)])
    files = sorted(str(p) for p in g.glob("*.txt"))
    t = tmp_path / "model"
    assert main(["train", *files, "--epochs", "2", "--hidden-size", "4", "--n-components", "2",
                 "--batch-size", "2", "--out", str(t)]) == 0
    assert len(json.loads((t / "history.json").read_text())) == 2
    e = tmp_path / "ext"
    assert main(["extend", files[0], "--method", "semm", "--model", str(t / "model.json"),
                 "--n-new", "10", "--out", str(e)]) == 0
    assert main(["extend", files[0], "--method", "semm", "--out", str(e)]) == 2
    ev = tmp_path / "ev"
    assert main(["evaluate", *files, "--model", str(t / "model.json"), "--out", str(ev)]) == 0
    assert np.isfinite(json.loads((ev / "metrics.json").read_text())["nll"])


def test_generate_other_processes(tmp_path):
    assert main(["generate", "--process", "cue", "--matrix-N", "16", "--count", "2", "--out", str(tmp_path / "c")]) == 0
    assert len(read_sequence(tmp_path / "c" / "cue_0000.txt")) == 16
    assert main(["generate", "--process", "poisson-ns", "--window-T", "50", "--out", str(tmp_path / "n")]) == 0
    assert main(["generate", "--process", "zeta", "--block-length", "100", "--count", "2",
                 "--out", str(tmp_path / "z")]) == 0
    assert len(read_sequence(tmp_path / "z" / "zeta_0001.txt")) == 100


def test_paper_scale_resolution():
    desk = ex.ExperimentConfig("exp5_attractive_semm").resolved()
    paper = ex.ExperimentConfig("exp5_attractive_semm", paper_scale=True, params={"epochs": 7}).resolved()
    assert desk["n_sequences"] == 40 and paper["n_sequences"] == 500
    assert paper["epochs"] == 7  # explicit params beat the paper-scale preset
    assert set(ex.DEFAULTS) == set(ex.EXPERIMENT_IDS)
