import csv
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))

from uavmec.env import UavMecEnv
from uavmec.sac import train

CACHE_ROOT = os.path.join(os.path.dirname(__file__), ".cache")
CACHE_SALT = "v3"  # bump to invalidate cached training runs


def _cfg_key(obj) -> str:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return json.dumps(out, sort_keys=True)


def train_cached(scenario, sac_cfg, mode="sac", channel=None) -> dict:
    """Run (or reuse) a deterministic training; artifacts live in tests/.cache."""
    key_src = "|".join([CACHE_SALT, mode, _cfg_key(scenario), _cfg_key(sac_cfg)])
    if channel is not None:
        key_src += "|" + _cfg_key(channel)
    key = hashlib.sha256(key_src.encode()).hexdigest()[:16]
    out_dir = os.path.join(CACHE_ROOT, key)
    log_path = os.path.join(out_dir, "training_log.csv")
    done_marker = os.path.join(out_dir, "done.json")

    def factory():
        return UavMecEnv(scenario, channel, mode=mode)

    if not os.path.exists(done_marker):
        print(f"[train-cache] {mode} K={scenario.K} M={scenario.M} "
              f"seed={sac_cfg.seed} episodes={sac_cfg.episodes} -> {out_dir}",
              flush=True)
        result = train(factory, sac_cfg, out_dir)
        with open(done_marker, "w") as fh:
            json.dump({"best_eval_return": result["best_eval_return"]}, fh)

    rows = []
    with open(log_path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (int(v) if k in ("episode", "steps") else float(v))
                         for k, v in row.items()})
    with open(os.path.join(out_dir, "eval_history.json")) as fh:
        eval_history = json.load(fh)
    return {
        "out_dir": out_dir,
        "log_path": log_path,
        "best_checkpoint": os.path.join(out_dir, "checkpoint_best.npz"),
        "last_checkpoint": os.path.join(out_dir, "checkpoint_last.npz"),
        "rows": rows,
        "eval_history": eval_history,
        "factory": factory,
    }
