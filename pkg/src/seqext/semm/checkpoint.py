"""Self-describing JSON checkpoints for trained models."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..seqcore import SeqError
from .model import SemmModel

FORMAT = "seqext-semm/1"

__all__ = ["FORMAT", "model_to_dict", "model_from_dict", "save_model", "load_model"]


def model_to_dict(model: SemmModel, extra: dict | None = None) -> dict:
    return {
        "format": FORMAT,
        "config": {"hidden_size": model.H, "n_components": model.K, "n_layers": model.n_layers,
                   "sigma_floor": model.sigma_floor},
        "input_transform": {"kind": "standardized_log_gap", "mean": model.feat_mean, "std": model.feat_std},
        "params": {k: {"shape": list(t.shape), "values": t.data.ravel().tolist()}
                   for k, t in model.params.items()},
        "extra": extra or {},
    }


def model_from_dict(obj: dict) -> SemmModel:
    if obj.get("format") != FORMAT:
        raise SeqError(f"unsupported checkpoint format {obj.get('format')!r}, expected {FORMAT!r}")
    c = obj["config"]
    model = SemmModel(c["hidden_size"], c["n_components"], c["n_layers"], seed=0,
                      sigma_floor=c["sigma_floor"])
    model.feat_mean = float(obj["input_transform"]["mean"])
    model.feat_std = float(obj["input_transform"]["std"])
    state = {}
    for k, v in obj["params"].items():
        if k not in model.params:
            raise SeqError(f"checkpoint has unknown parameter {k!r}")
        state[k] = np.asarray(v["values"], dtype=float).reshape(v["shape"])
    missing = set(model.params) - set(state)
    if missing:
        raise SeqError(f"checkpoint is missing parameters: {sorted(missing)}")
    model.params.load(state)
    return model


def save_model(model: SemmModel, path, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, extra)))


def load_model(path) -> SemmModel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SeqError(f"{path}: corrupt checkpoint ({e})") from e
    return model_from_dict(obj)
