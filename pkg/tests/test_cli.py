import csv
import json
import os

import numpy as np
import pytest

from uavmec.cli import main

MICRO = """
[experiment]
profile = desk
seeds = 0
out = {out}
eval_episodes = 1

[scenario]
K = 2
T = 8

[sac]
episodes = 3
batch_size = 16
buffer_capacity = 100
hidden = 8,8
updates_per_episode = 2
eval_every = 3
eval_episodes = 1
"""


@pytest.fixture()
def micro_ini(tmp_path):
    path = tmp_path / "micro.ini"
    path.write_text(MICRO.format(out=tmp_path / "out"))
    return path


def test_missing_config_exits_2(capsys):
    rc = main(["train", "--config", "/nope/missing.ini"])
    assert rc == 2
    assert "/nope/missing.ini" in capsys.readouterr().err


def test_unknown_sweep_axis_exits_2(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nsweep_axis = qq\nsweep_values = 1\n")
    rc = main(["sweep", "--config", str(path)])
    assert rc == 2
    assert "qq" in capsys.readouterr().err


def test_train_writes_artifacts(micro_ini, tmp_path):
    rc = main(["train", "--config", str(micro_ini)])
    assert rc == 0
    run = tmp_path / "out" / "sac" / "0"
    assert (run / "training_log.csv").exists()
    assert (run / "checkpoint_best.npz").exists()
    assert (run / "manifest.json").exists()
    assert (run / "reward_curve.png").exists()
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["scenario"]["K"] == 2


def test_train_two_seeds_disjoint_dirs(micro_ini, tmp_path):
    rc = main(["train", "--config", str(micro_ini), "--seed", "1", "--seed", "2",
               "--no-figures"])
    assert rc == 0
    assert (tmp_path / "out" / "sac" / "1" / "training_log.csv").exists()
    assert (tmp_path / "out" / "sac" / "2" / "training_log.csv").exists()


def test_era_mode_recorded_in_manifest(micro_ini, tmp_path):
    rc = main(["train", "--config", str(micro_ini), "--mode", "era",
               "--no-figures"])
    assert rc == 0
    manifest = json.loads(
        (tmp_path / "out" / "era" / "0" / "manifest.json").read_text())
    assert manifest["mode"] == "era"


def test_eval_requires_checkpoint_for_sac(micro_ini, capsys):
    rc = main(["eval", "--config", str(micro_ini)])
    assert rc == 2
    assert "checkpoint" in capsys.readouterr().err


def test_eval_corrupt_checkpoint_exits_3(micro_ini, tmp_path, capsys):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"garbage")
    rc = main(["eval", "--config", str(micro_ini), "--checkpoint", str(bad)])
    assert rc == 3


def test_eval_version_mismatch_reported(micro_ini, tmp_path, capsys):
    bad = tmp_path / "old.npz"
    np.savez(bad, __meta__=np.frombuffer(
        json.dumps({"format_version": 0}).encode(), dtype=np.uint8))
    rc = main(["eval", "--config", str(micro_ini), "--checkpoint", str(bad)])
    assert rc == 3
    assert "version mismatch" in capsys.readouterr().err


def test_eval_random_needs_no_checkpoint(micro_ini, tmp_path):
    rc = main(["eval", "--config", str(micro_ini), "--mode", "random",
               "--trace", "--no-figures"])
    assert rc == 0
    run = tmp_path / "out" / "eval" / "random" / "0"
    assert (run / "summary.json").exists()
    summary = json.loads((run / "summary.json").read_text())
    assert summary["mean_weighted_energy"] > 0
    # trajectory rows = episodes * T * M
    with open(run / "trajectory.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 * 8 * 2
    assert list(rows[0]) == ["t", "uav", "x", "y", "z"]
    # trace lines = episodes * T, with the documented schema
    lines = (run / "trace.jsonl").read_text().strip().splitlines()
    assert len(lines) == 8
    rec = json.loads(lines[0])
    assert {"t", "reward", "e_weighted_total", "p_tm"} <= set(rec)


def test_full_train_eval_round_trip(micro_ini, tmp_path):
    assert main(["train", "--config", str(micro_ini), "--no-figures"]) == 0
    ck = tmp_path / "out" / "sac" / "0" / "checkpoint_best.npz"
    rc = main(["eval", "--config", str(micro_ini), "--checkpoint", str(ck)])
    assert rc == 0
    run = tmp_path / "out" / "eval" / "sac" / "0"
    assert (run / "trajectory.png").exists()
    assert (run / "energy_components.png").exists()


def test_sweep_row_count_and_figure(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(f"""
[experiment]
profile = trend
seeds = 0,1
out = {tmp_path / 'out'}
modes = random
sweep_axis = M
sweep_values = 2,3

[scenario]
K = 2
T = 6

[sac]
episodes = 2
batch_size = 8
buffer_capacity = 50
hidden = 8,8
updates_per_episode = 1
eval_every = 2
eval_episodes = 1
""")
    rc = main(["sweep", "--config", str(path)])
    assert rc == 0
    sweep = tmp_path / "out" / "sweep" / "sweep.csv"
    with open(sweep, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 1 * 2  # values x modes x seeds
    assert list(rows[0]) == ["value", "mode", "seed", "mean_weighted_energy"]
    assert (tmp_path / "out" / "sweep" / "sweep.png").exists()


def test_oracle_command(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(f"""
[experiment]
profile = desk
out = {tmp_path / 'out'}

[scenario]
K = 1
""")
    rc = main(["oracle", "--config", str(path), "--mode", "random",
               "--slots", "2", "--no-figures"])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "oracle_report.json").read_text())
    assert report["n_slots"] == 2
    assert "mean_gap" in report


def test_oracle_rejects_large_scenario(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nprofile = desk\n")
    rc = main(["oracle", "--config", str(path), "--mode", "random",
               "--slots", "1", "--out", str(tmp_path / "o")])
    assert rc == 2  # desk K=5 exceeds the oracle's instance guard
