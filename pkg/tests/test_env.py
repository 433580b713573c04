import numpy as np
import pytest

from uavmec.channel import ChannelParams
from uavmec.energy import EnergyBreakdown
from uavmec.env import UavMecEnv, action_dim, penalty_factor, state_dim, trace_record
from uavmec.scenario import ScenarioConfig

from checker import check_decision


def small_cfg(**kw):
    base = dict(K=4, M=2, Z=2, T=10, seed=5)
    base.update(kw)
    return ScenarioConfig(**base)


def ample_services_cfg(**kw):
    # explicit tiny footprints so every UAV can host every service
    base = dict(K=2, M=2, Z=2, T=10, seed=2,
                a_z=np.array([1.0, 1.0]), b_z=np.array([1.0, 1.0]),
                A_m=np.array([10.0, 10.0]), B_m=np.array([10.0, 10.0]),
                c_z=np.array([800.0, 800.0]), p_local=1.0)
    base.update(kw)
    return ScenarioConfig(**base)


def test_reset_deterministic():
    env1 = UavMecEnv(small_cfg())
    env2 = UavMecEnv(small_cfg())
    assert np.array_equal(env1.reset(seed=3), env2.reset(seed=3))


def test_state_dimension_formula():
    assert state_dim(20, 5) == 210
    assert action_dim(20, 5, 5) == 280
    env = UavMecEnv(small_cfg())
    assert env.reset().shape == (state_dim(4, 2),)


def test_state_entries_normalized():
    env = UavMecEnv(small_cfg())
    s = env.reset(seed=0)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert np.all(s >= 0.0) and np.all(s <= 1.0)
        s, _, done, _ = env.step(rng.uniform(-1, 1, env.action_dim))
        if done:
            break


def build_action(env, sched=None, plc=None, relay=None, split=None,
                 fshare=None, vel=None):
    cfg = env.cfg
    K, M, Z = cfg.K, cfg.M, cfg.Z
    a = np.zeros(env.action_dim)
    blocks = [(0, K * M, sched), (K * M, K * M + M * Z, plc),
              (K * M + M * Z, 2 * K * M + M * Z, relay),
              (2 * K * M + M * Z, 2 * K * M + M * Z + K, split),
              (2 * K * M + M * Z + K, 2 * K * M + M * Z + 2 * K, fshare),
              (2 * K * M + M * Z + 2 * K, env.action_dim, vel)]
    for lo, hi, block in blocks:
        if block is not None:
            a[lo:hi] = np.asarray(block).ravel()
    return a


def test_decode_equal_compute_logits_split_budget():
    env = UavMecEnv(ample_services_cfg())
    env.reset()
    # both users scheduled and relayed to UAV 0 with equal compute logits
    sched = np.array([[1.0, -1.0], [1.0, -1.0]])
    plc = np.full((2, 2), 0.5)
    relay = np.array([[1.0, -1.0], [1.0, -1.0]])
    a = build_action(env, sched=sched, plc=plc, relay=relay,
                     split=[0.5, 0.5], fshare=[0.5, 0.5])
    decision, placement = env.decode_action(a)
    assert placement.all()
    assert np.array_equal(decision.relay, [0, 0])
    # requests 0.75*F each exceed the budget, so each gets F/2
    assert np.allclose(decision.f_uav, env.cfg.F_m / 2)


def test_decode_compute_level_below_budget():
    env = UavMecEnv(ample_services_cfg())
    env.reset()
    sched = np.array([[1.0, -1.0], [1.0, -1.0]])
    relay = np.array([[1.0, -1.0], [1.0, -1.0]])
    a = build_action(env, sched=sched, plc=np.full((2, 2), 0.5), relay=relay,
                     fshare=[-0.5, -0.5])
    decision, _ = env.decode_action(a)
    # unsaturated requests pass through: the policy controls the level
    assert np.allclose(decision.f_uav, 0.25 ** 2 * env.cfg.F_m)


def test_decode_era_mode_ignores_compute_logits():
    env = UavMecEnv(ample_services_cfg(), mode="era")
    env.reset()
    sched = np.array([[1.0, -1.0], [1.0, -1.0]])
    relay = np.array([[1.0, -1.0], [1.0, -1.0]])
    a = build_action(env, sched=sched, plc=np.full((2, 2), 0.5), relay=relay,
                     fshare=[0.9, -0.9])
    decision, _ = env.decode_action(a)
    assert np.allclose(decision.f_uav, env.cfg.F_m / 2)


def test_decode_relay_respects_placement():
    env = UavMecEnv(small_cfg(K=6, M=3, Z=3, seed=9))
    env.reset(seed=1)
    rng = np.random.default_rng(7)
    for _ in range(100):
        decision, placement = env.decode_action(rng.uniform(-1, 1, env.action_dim))
        for k in range(env.cfg.K):
            z = env.world.task_types[k]
            assert placement[decision.relay[k], z]


def test_decode_rho_forced_without_local_service():
    env = UavMecEnv(small_cfg(p_local=0.0))
    env.reset(seed=1)
    decision, _ = env.decode_action(np.zeros(env.action_dim))
    assert np.all(decision.rho == 1.0)


def test_decode_constraints_random_actions():
    env = UavMecEnv(small_cfg(K=5, M=3, Z=3, seed=12))
    env.reset(seed=0)
    rng = np.random.default_rng(123)
    for _ in range(300):
        decision, placement = env.decode_action(rng.uniform(-1, 1, env.action_dim))
        assert check_decision(decision, placement, env.world) == []


def test_penalty_factor_closed_forms():
    delta = 1.0
    assert penalty_factor(4 * delta, delta, delta) == pytest.approx(
        2 - np.exp(-3), abs=1e-9)
    assert penalty_factor(3.0, 0.0, 3.0) == pytest.approx(2 - np.exp(-1), abs=1e-9)
    assert penalty_factor(0.5, 1.0, 1.0) == 1.0


def test_reward_no_violations_equals_energy():
    env = UavMecEnv(small_cfg())
    env.reset()
    energy = EnergyBreakdown.combine(1.0, 2.0, 0.5, 0.3, 100.0, 0.5)
    delays = np.full(env.cfg.K, 0.5)
    positions = np.array([[100.0, 100.0, 150.0], [400.0, 400.0, 150.0]])
    r, pen = env.compute_reward(energy, delays, positions)
    assert pen.p_tm == 1.0 and pen.p_dis == 1.0 and pen.p_ob == 1.0
    assert r == -energy.e_weighted_total


def test_reward_coincident_uavs_pair_penalty():
    env = UavMecEnv(small_cfg())
    env.reset()
    energy = EnergyBreakdown.combine(0.0, 0.0, 0.0, 0.0, 2.0, 1.0)
    delays = np.zeros(env.cfg.K)
    positions = np.array([[100.0, 100.0, 150.0], [100.0, 100.0, 150.0]])
    _, pen = env.compute_reward(energy, delays, positions)
    assert pen.p_dis == pytest.approx(2 - np.exp(-1), abs=1e-9)


def test_reward_timeout_penalty_value():
    env = UavMecEnv(small_cfg(K=1, M=1))
    env.reset()
    energy = EnergyBreakdown.combine(1.0, 0.0, 0.0, 0.0, 0.0, 0.5)
    delays = np.array([4.0])  # 4x the slot duration
    positions = np.array([[100.0, 100.0, 150.0]])
    r, pen = env.compute_reward(energy, delays, positions)
    assert pen.p_tm == pytest.approx(2 - np.exp(-3), abs=1e-9)
    assert r == pytest.approx(-(2 - np.exp(-3)), abs=1e-9)


def test_out_of_bounds_penalty_term():
    env = UavMecEnv(small_cfg(M=1, K=1))
    env.reset()
    energy = EnergyBreakdown.combine(1.0, 0.0, 0.0, 0.0, 0.0, 0.5)
    positions = np.array([[510.0, 250.0, 150.0]])
    _, pen = env.compute_reward(energy, np.zeros(1), positions)
    assert pen.p_ob == pytest.approx(1.0 + 10.0 / env.cfg.W)


def test_episode_length_and_done():
    env = UavMecEnv(small_cfg(T=10))
    env.reset(seed=0)
    rng = np.random.default_rng(0)
    steps = 0
    done = False
    while not done:
        _, _, done, _ = env.step(rng.uniform(-1, 1, env.action_dim))
        steps += 1
    assert steps == 10
    with pytest.raises(RuntimeError):
        env.step(np.zeros(env.action_dim))


def test_rewards_nonpositive():
    env = UavMecEnv(small_cfg())
    env.reset(seed=4)
    rng = np.random.default_rng(4)
    done = False
    while not done:
        _, r, done, _ = env.step(rng.uniform(-1, 1, env.action_dim))
        assert r <= 0.0


def test_info_energy_identity_every_step():
    env = UavMecEnv(small_cfg())
    env.reset(seed=8)
    rng = np.random.default_rng(8)
    done = False
    while not done:
        _, _, done, info = env.step(rng.uniform(-1, 1, env.action_dim))
        e = info["energy"]
        expect = (e.e_local + e.e_uplink) + env.cfg.omega * (
            e.e_relay + e.e_uav_compute + e.e_fly)
        assert e.e_weighted_total == pytest.approx(expect, rel=1e-12)


def test_trajectory_determinism():
    actions = np.random.default_rng(99).uniform(-1, 1, (10, action_dim(4, 2, 2)))

    def run():
        env = UavMecEnv(small_cfg(T=10))
        s = env.reset(seed=21)
        out = [s]
        for a in actions:
            s, r, done, _ = env.step(a)
            out.append(np.append(s, r))
        return np.concatenate(out)

    assert np.array_equal(run(), run())


def test_fsp_mode_keeps_placement_frozen():
    env = UavMecEnv(small_cfg(K=6, M=3, Z=3, seed=13), mode="fsp")
    env.reset(seed=0)
    first = env.world.placement.copy()
    rng = np.random.default_rng(5)
    for _ in range(5):
        _, _, _, info = env.step(rng.uniform(-1, 1, env.action_dim))
        assert np.array_equal(info["placement"], first)


def test_sac_mode_can_move_placement():
    env = UavMecEnv(small_cfg(K=6, M=3, Z=3, seed=13), mode="sac")
    env.reset(seed=0)
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(10):
        _, _, _, info = env.step(rng.uniform(-1, 1, env.action_dim))
        seen.add(info["placement"].tobytes())
    assert len(seen) > 1


def test_fixed_scheduling_flag():
    env = UavMecEnv(small_cfg(), fix_scheduling=True)
    env.reset(seed=0)
    rng = np.random.default_rng(6)
    servings = []
    for _ in range(5):
        _, _, _, info = env.step(rng.uniform(-1, 1, env.action_dim))
        servings.append(info["decision"].serving.copy())
    for s in servings[1:]:
        assert np.array_equal(s, servings[0])


def test_trace_record_schema():
    env = UavMecEnv(small_cfg())
    env.reset(seed=0)
    _, r, _, info = env.step(np.zeros(env.action_dim))
    rec = trace_record(info["t"], r, info)
    assert rec["t"] == 0
    assert set(rec) == {"t", "reward", "e_local", "e_uplink", "e_relay",
                        "e_uav_compute", "e_fly", "e_weighted_total",
                        "p_tm", "p_dis", "p_ob", "uav_positions"}
    assert len(rec["uav_positions"]) == env.cfg.M


def test_aggregate_interference_mode_runs():
    env = UavMecEnv(small_cfg(), ChannelParams(interference_mode="aggregate"))
    env.reset(seed=0)
    s, r, _, _ = env.step(np.zeros(env.action_dim))
    assert np.all(np.isfinite(s)) and np.isfinite(r)
