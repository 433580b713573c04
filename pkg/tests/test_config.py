import numpy as np
import pytest

from uavmec.config import (ExperimentSpec, apply_axis_value, desk_profile,
                           full_profile, load_spec, resolve_axis,
                           spec_to_manifest, trend_profile)
from uavmec.errors import ConfigError


def test_empty_config_is_full_scale():
    spec = load_spec(None)
    assert spec.scenario.K == 20
    assert spec.scenario.M == 5
    assert spec.scenario.Z == 5
    assert spec.scenario.F_m == 10e9
    assert spec.sac.episodes == 600
    assert spec.sac.batch_size == 256
    assert spec.sac.buffer_capacity == 20000
    assert spec.sac.gamma == 0.98


def test_desk_profile_dimensions():
    spec = desk_profile()
    assert (spec.scenario.K, spec.scenario.M, spec.scenario.Z) == (5, 2, 2)
    assert spec.sac.episodes == 300


def test_missing_file_raises_config_error(tmp_path):
    with pytest.raises(ConfigError, match="no_such"):
        load_spec(tmp_path / "no_such.ini")


def test_load_overrides(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("""
[experiment]
profile = desk
seeds = 1,2
mode = fsp
out = myout

[scenario]
K = 7
omega = 0.25

[sac]
episodes = 11
hidden = 32,32
""")
    spec = load_spec(path)
    assert spec.scenario.K == 7
    assert spec.scenario.omega == 0.25
    assert spec.scenario.M == 2  # desk base
    assert spec.sac.episodes == 11
    assert spec.sac.hidden == (32, 32)
    assert spec.seeds == [1, 2]
    assert spec.mode == "fsp"
    assert spec.out == "myout"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[scenario]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_spec(path)


def test_unknown_profile_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nprofile = galaxy\n")
    with pytest.raises(ConfigError, match="galaxy"):
        load_spec(path)


def test_bad_mode_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nmode = ppo\n")
    with pytest.raises(ConfigError, match="mode"):
        load_spec(path)


def test_axis_resolution():
    spec = full_profile()
    assert resolve_axis(spec, "K") == ("scenario", "K")
    assert resolve_axis(spec, "scenario.K") == ("scenario", "K")
    assert resolve_axis(spec, "B0") == ("channel", "B0")
    assert resolve_axis(spec, "sac.episodes") == ("sac", "episodes")
    with pytest.raises(ConfigError):
        resolve_axis(spec, "warp_factor")


def test_apply_axis_value_casts_ints():
    spec = full_profile()
    out = apply_axis_value(spec, "K", 7.0)
    assert out.scenario.K == 7 and isinstance(out.scenario.K, int)
    out = apply_axis_value(spec, "omega", 0.3)
    assert out.scenario.omega == 0.3


def test_sweep_axis_validated_at_load(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("""
[experiment]
sweep_axis = nonsense
sweep_values = 1,2
""")
    with pytest.raises(ConfigError, match="nonsense"):
        load_spec(path)


def test_array_fields_parse(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("""
[scenario]
Z = 2
c_z = 600, 900
""")
    spec = load_spec(path)
    assert np.array_equal(spec.scenario.c_z, [600.0, 900.0])


def test_trend_profile_negligible_propulsion():
    spec = trend_profile()
    assert spec.scenario.P0 < 0.01 and spec.scenario.P1 < 0.01


def test_manifest_serializable(tmp_path):
    import json
    spec = desk_profile()
    manifest = spec_to_manifest(spec, seed=4)
    text = json.dumps(manifest)
    assert "scenario" in manifest and manifest["seed"] == 4
    assert json.loads(text)["sac"]["episodes"] == 300
