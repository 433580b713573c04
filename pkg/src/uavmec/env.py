"""Episodic decision process wrapping the physics modules.

One step = one time slot: decode the flat action, evaluate the offload
pipeline under the rates sampled for this slot, form the penalized reward,
then advance kinematics and sample the next slot's tasks and channels.

Operating modes
  sac / random : placement and compute shares decoded from the action
  fsp          : service placement frozen at the episode-start round-robin
  era          : each compute UAV's budget split equally among routed users
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, user_uav_rate_matrix, uav_uav_rate_matrix
from .energy import (EnergyBreakdown, SlotDecision, TaskSpec, local_delay_energy,
                     relay_delay_energy, slot_energy, total_user_delay,
                     uav_compute_delay_energy, uplink_delay_energy)
from .placement import fsp_placement, repair_placement
from .scenario import (ScenarioConfig, WorldState, build_scenario,
                       fleet_propulsion_energy, out_of_bounds_excess,
                       step_kinematics, velocity_from_controls)

MODES = ("sac", "fsp", "era", "random")

# fading power |h|^2 rarely exceeds this multiple of its mean; used only to
# pin the state-normalization range for rates
FADE_CAP = 20.0


@dataclass
class PenaltyTerms:
    p_tm: float
    p_dis: float
    p_ob: float


def penalty_factor(a: float, b: float, c: float) -> float:
    """2 - exp(-max(0, (a - b)/c)); equals 1 when a <= b, saturates at 2."""
    return 2.0 - np.exp(-max(0.0, (a - b) / c))


def state_dim(K: int, M: int) -> int:
    return M + M + 2 * K + K + K * M + M * M + 3 * M


def action_dim(K: int, M: int, Z: int) -> int:
    return 2 * K * M + M * Z + 2 * K + 3 * M


class UavMecEnv:
    def __init__(self, scenario: ScenarioConfig, channel: ChannelParams | None = None,
                 mode: str = "sac", fix_scheduling: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        scenario.validate()
        self.cfg = scenario
        self.chan = channel if channel is not None else ChannelParams()
        self.chan.validate()
        self.mode = mode
        self.fix_scheduling = fix_scheduling
        self.world: WorldState | None = None
        self.rng: np.random.Generator | None = None
        self._done = True
        self._prev_f_user = np.zeros(scenario.K)
        self._fixed_serving: np.ndarray | None = None
        # normalization caps for the rate blocks
        best_gain = self.chan.varpi / scenario.H_min ** self.chan.gamma_pl * FADE_CAP
        self._rate_ref_user = self.chan.B0 * np.log2(
            1.0 + best_gain * scenario.p_k / self.chan.sigma0_sq)
        self._rate_ref_uav = self.chan.B1 * np.log2(
            1.0 + self.chan.beta0 * scenario.P_m_tx / self.chan.sigma1_sq)

    # ------------------------------------------------------------------
    @property
    def state_dim(self) -> int:
        return state_dim(self.cfg.K, self.cfg.M)

    @property
    def action_dim(self) -> int:
        return action_dim(self.cfg.K, self.cfg.M, self.cfg.Z)

    # ------------------------------------------------------------------
    def reset(self, seed: int | None = None) -> np.ndarray:
        """Rebuild the scenario (fixed by config.seed) and start an episode.

        `seed` varies only the per-slot task/channel stream, so different
        episodes share one geography; pass a different config seed for a new
        layout.
        """
        scenario_rng = np.random.default_rng([self.cfg.seed, 0])
        self.world = build_scenario(self.cfg, scenario_rng)
        if seed is None:
            self.rng = np.random.default_rng([self.cfg.seed, 1])
        else:
            if int(seed) < 0:
                raise ValueError("reset seed must be non-negative")
            self.rng = np.random.default_rng([self.cfg.seed, 2, int(seed)])
        base = fsp_placement(self.world.a_z, self.world.b_z,
                             self.world.A_m, self.world.B_m)
        self.world.placement = base
        self._fsp_matrix = base.copy()
        self._prev_f_user = np.zeros(self.cfg.K)
        self._fixed_serving = None
        self.world.t = 0
        self._done = False
        self._sample_slot()
        return self.state_vector()

    def _sample_slot(self) -> None:
        w = self.world
        cfg = self.cfg
        w.task_sizes = self.rng.uniform(cfg.D_min, cfg.D_max, size=cfg.K)
        w.task_types = self.rng.integers(0, cfg.Z, size=cfg.K)
        w.rates_user_uav = user_uav_rate_matrix(
            w.user_positions(), w.uav_positions(), cfg.p_k, self.chan, self.rng)
        w.rates_uav_uav = uav_uav_rate_matrix(
            w.uav_positions(), cfg.P_m_tx, self.chan)

    # ------------------------------------------------------------------
    def state_vector(self) -> np.ndarray:
        """Flat observation, every block min-max scaled into [0, 1]."""
        w = self.world
        cfg = self.cfg
        mem_used = w.placement @ w.a_z
        sto_used = w.placement @ w.b_z
        d_span = max(cfg.D_max - cfg.D_min, 1e-12)
        c_span = max(cfg.C_max - cfg.C_min, 1e-12)
        task_block = np.empty(2 * cfg.K)
        task_block[0::2] = (w.task_sizes - cfg.D_min) / d_span
        task_block[1::2] = (w.c_z[w.task_types] - cfg.C_min) / c_span
        pos = w.uav_positions()
        pos_block = np.empty((cfg.M, 3))
        pos_block[:, 0] = (pos[:, 0] - cfg.X_min) / (cfg.X_max - cfg.X_min)
        pos_block[:, 1] = (pos[:, 1] - cfg.X_min) / (cfg.X_max - cfg.X_min)
        pos_block[:, 2] = (pos[:, 2] - cfg.H_min) / (cfg.H_max - cfg.H_min)
        parts = [mem_used / w.A_m,
                 sto_used / w.B_m,
                 task_block,
                 self._prev_f_user / cfg.F_k,
                 w.rates_user_uav.ravel() / self._rate_ref_user,
                 w.rates_uav_uav.ravel() / self._rate_ref_uav,
                 pos_block.ravel()]
        return np.clip(np.concatenate(parts), 0.0, 1.0)

    # ------------------------------------------------------------------
    def decode_action(self, action: np.ndarray) -> tuple[SlotDecision, np.ndarray]:
        """Map a flat action in [-1, 1]^dim to feasible slot controls."""
        cfg = self.cfg
        w = self.world
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        K, M, Z = cfg.K, cfg.M, cfg.Z
        i = 0
        sched = a[i:i + K * M].reshape(K, M); i += K * M
        plc = a[i:i + M * Z].reshape(M, Z); i += M * Z
        relay_logits = a[i:i + K * M].reshape(K, M); i += K * M
        split = a[i:i + K]; i += K
        fshare = a[i:i + K]; i += K
        vel = a[i:i + 3 * M].reshape(M, 3)

        serving = np.argmax(sched, axis=1)
        if self.fix_scheduling:
            if self._fixed_serving is None:
                self._fixed_serving = serving.copy()
            serving = self._fixed_serving.copy()

        if self.mode == "fsp":
            placement = self._fsp_matrix.copy()
        else:
            placement = repair_placement(plc, w.a_z, w.b_z, w.A_m, w.B_m)

        # compute UAV: best relay logit among hosts of the task's type
        relay = np.zeros(K, dtype=int)
        for k in range(K):
            hosts = np.nonzero(placement[:, w.task_types[k]])[0]
            relay[k] = hosts[int(np.argmax(relay_logits[k, hosts]))]

        rho = 0.5 * (split + 1.0)
        local_mask = w.local_service_mask()
        has_local = local_mask[np.arange(K), w.task_types]
        rho = np.where(has_local, rho, 1.0)

        # per-compute-UAV cycle allocation, capped at the UAV budget
        f_uav = np.zeros(K)
        for n in range(M):
            routed = np.nonzero(relay == n)[0]
            if routed.size == 0:
                continue
            budget = w.F_m[n]
            if self.mode == "era":
                f_uav[routed] = budget / routed.size
            else:
                # square law: compute energy is quadratic in the rate, so the
                # low-rate band gets most of the control range
                req = (0.5 * (fshare[routed] + 1.0)) ** 2 * budget
                total = req.sum()
                if total > budget:
                    req *= budget / total
                f_uav[routed] = req

        velocities = np.array([
            velocity_from_controls(vel[m, 0], vel[m, 1], vel[m, 2], cfg.v_max)
            for m in range(M)])
        decision = SlotDecision(serving=serving, rho=rho, relay=relay,
                                f_uav=f_uav, f_user=np.zeros(K),
                                velocities=velocities)
        return decision, placement

    # ------------------------------------------------------------------
    def evaluate_slot(self, decision: SlotDecision) -> tuple[EnergyBreakdown, np.ndarray]:
        """Run the pipeline for the current slot; returns breakdown and delays."""
        cfg = self.cfg
        w = self.world
        e_local = e_uplink = e_relay = e_uav = 0.0
        delays = np.zeros(cfg.K)
        for k in range(cfg.K):
            task = TaskSpec(d=w.task_sizes[k], z=int(w.task_types[k]),
                            c_z=float(w.c_z[w.task_types[k]]))
            rho_k = float(decision.rho[k])
            m = int(decision.serving[k])
            n = int(decision.relay[k])
            # local side runs at the just-in-time frequency, capped at F_k
            d_local = task.d * (1.0 - rho_k)
            f_user = min(d_local * task.c_z / cfg.delta, cfg.F_k) if d_local > 0 else 0.0
            decision.f_user[k] = f_user
            t_l, e_l = local_delay_energy(task, rho_k, f_user, cfg.kappa)
            t_o, e_o = uplink_delay_energy(task, rho_k, w.rates_user_uav[k, m],
                                           cfg.p_k, cfg.delta)
            t_x, e_x = relay_delay_energy(task, rho_k, m, n, w.rates_uav_uav[m, n],
                                          cfg.P_m_tx, cfg.delta)
            t_u, e_u = uav_compute_delay_energy(task, rho_k, decision.f_uav[k],
                                                cfg.kappa, cfg.delta)
            delays[k] = total_user_delay(t_l, t_o, t_x, t_u)
            e_local += e_l
            e_uplink += e_o
            e_relay += e_x
            e_uav += e_u
        speeds = np.linalg.norm(decision.velocities, axis=1)
        e_fly = fleet_propulsion_energy(speeds, cfg)
        breakdown = slot_energy(e_local, e_uplink, e_relay, e_uav, e_fly, cfg.omega)
        return breakdown, delays

    # ------------------------------------------------------------------
    def compute_reward(self, energy: EnergyBreakdown, delays: np.ndarray,
                       positions: np.ndarray) -> tuple[float, PenaltyTerms]:
        cfg = self.cfg
        p_tm = float(np.mean([penalty_factor(t, cfg.delta, cfg.delta)
                              for t in delays]))
        M = positions.shape[0]
        if M > 1:
            total = 0.0
            for i in range(M):
                for j in range(M):
                    if i != j:
                        dist = float(np.linalg.norm(positions[i] - positions[j]))
                        total += penalty_factor(cfg.d_dim, dist, cfg.d_dim)
            p_dis = total / (M * (M - 1))
        else:
            p_dis = 1.0
        p_ob = float(np.mean([
            1.0 + out_of_bounds_excess(q, cfg.X_min, cfg.X_max) / cfg.W
            for q in positions]))
        reward = -energy.e_weighted_total * p_tm * p_dis * p_ob
        return reward, PenaltyTerms(p_tm=p_tm, p_dis=p_dis, p_ob=p_ob)

    # ------------------------------------------------------------------
    def step(self, action: np.ndarray):
        if self._done or self.world is None:
            raise RuntimeError("step() called on a finished episode; call reset()")
        w = self.world
        decision, placement = self.decode_action(action)
        w.placement = placement
        breakdown, delays = self.evaluate_slot(decision)
        positions = w.uav_positions()
        reward, penalties = self.compute_reward(breakdown, delays, positions)

        self._prev_f_user = decision.f_user.copy()
        for m in range(self.cfg.M):
            w.uavs[m].v = decision.velocities[m]
            w.uavs[m] = step_kinematics(w.uavs[m], self.cfg.delta, self.cfg)
        w.t += 1
        self._done = w.t >= self.cfg.T
        self._sample_slot()
        state = self.state_vector()
        info = {
            "energy": breakdown,
            "penalties": penalties,
            "delays": delays,
            "positions": positions,
            "decision": decision,
            "placement": placement,
            "t": w.t - 1,
        }
        return state, reward, self._done, info


def trace_record(t: int, reward: float, info: dict) -> dict:
    """JSON-lines trace schema consumed by the report/plot path."""
    e: EnergyBreakdown = info["energy"]
    p: PenaltyTerms = info["penalties"]
    return {
        "t": int(t),
        "reward": float(reward),
        "e_local": e.e_local,
        "e_uplink": e.e_uplink,
        "e_relay": e.e_relay,
        "e_uav_compute": e.e_uav_compute,
        "e_fly": e.e_fly,
        "e_weighted_total": e.e_weighted_total,
        "p_tm": p.p_tm,
        "p_dis": p.p_dis,
        "p_ob": p.p_ob,
        "uav_positions": [list(map(float, q)) for q in info["positions"]],
    }
