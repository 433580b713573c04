"""Brute-force single-slot optimum for tiny instances (K <= 2, M <= 2, Z <= 2).

Searches every serving/relay/placement combination on a per-user grid over
the offload ratio and a compute-rate multiplier, then polishes the best grid
point continuously.  The rate axis spans zero (the stalled-compute sentinel)
up to the just-in-time rate that finishes exactly when the penalty would
start to grow, so deliberately-late low-energy operating points are covered
and the optimum lower-bounds every decoded action on the same frozen slot.
Propulsion enters at the fleet minimum-power speed.  For two users sharing a
compute UAV the budget coupling is relaxed (per-user caps only), which can
only lower the optimum, keeping the bound valid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .energy import TIMEOUT_FACTOR
from .env import UavMecEnv, penalty_factor
from .errors import ConfigError
from .placement import enumerate_feasible_placements
from .scenario import min_propulsion_power, out_of_bounds_excess

RHO_GRID_POINTS = 101   # single-user grids; two-user grids use a coarser one
RHO_GRID_POINTS_2 = 41
RATE_GRID_POINTS = 25
RATE_GRID_POINTS_2 = 13


@dataclass
class FrozenSlot:
    seed: int
    state: np.ndarray
    task_sizes: np.ndarray
    task_types: np.ndarray
    local_mask: np.ndarray
    rates_user: np.ndarray
    rates_uav: np.ndarray
    positions: np.ndarray


def freeze_slot(env: UavMecEnv, seed: int) -> FrozenSlot:
    state = env.reset(seed=seed)
    w = env.world
    return FrozenSlot(seed=seed, state=state,
                      task_sizes=w.task_sizes.copy(),
                      task_types=w.task_types.copy(),
                      local_mask=w.local_service_mask().copy(),
                      rates_user=w.rates_user_uav.copy(),
                      rates_uav=w.rates_uav_uav.copy(),
                      positions=w.uav_positions().copy())


def frozen_penalty_consts(cfg, positions: np.ndarray) -> tuple[float, float]:
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
    p_ob = float(np.mean([1.0 + out_of_bounds_excess(q, cfg.X_min, cfg.X_max) / cfg.W
                          for q in positions]))
    return p_dis, p_ob


def _user_components(cfg, world, slot: FrozenSlot, k: int, m: int, n: int,
                     rho, u):
    """Per-user energies and penalty factor over broadcast (rho, u) arrays.

    `u` scales the compute rate relative to the latest-finish just-in-time
    rate; u = 0 means a stalled allocation (sentinel delay, zero energy).
    """
    d = slot.task_sizes[k]
    c = world.c_z[slot.task_types[k]]
    d_loc = d * (1.0 - rho)
    cycles = d_loc * c
    f_user = np.minimum(cycles / cfg.delta, cfg.F_k)
    t_l = np.where(d_loc > 0, cycles / np.maximum(f_user, 1e-12), 0.0)
    e_l = cfg.kappa * cycles * f_user ** 2

    d_off = d * rho
    t_o = np.where(d_off > 0, d_off / slot.rates_user[k, m], 0.0)
    e_o = cfg.p_k * t_o
    if m != n:
        t_x = np.where(d_off > 0, d_off / slot.rates_uav[m, n], 0.0)
        e_x = cfg.P_m_tx * t_x
    else:
        t_x = np.zeros_like(t_o)
        e_x = np.zeros_like(t_o)

    # the chain may finish as late as max(delta, t_local) at no extra penalty
    remaining = np.maximum(cfg.delta, t_l) - t_o - t_x
    f_ref = np.where(remaining > 0,
                     np.minimum(d_off * c / np.maximum(remaining, 1e-12), cfg.F_m),
                     cfg.F_m)
    f = np.where(d_off > 0, u * f_ref, 0.0)
    f_safe = np.where(f > 0, f, 1.0)
    t_u = np.where(d_off > 0,
                   np.where(f > 0, d_off * c / f_safe,
                            TIMEOUT_FACTOR * cfg.delta),
                   0.0)
    e_u = cfg.kappa * c * d_off * f ** 2

    t_k = np.maximum(t_l, t_o + t_x + t_u)
    p_k = 2.0 - np.exp(-np.maximum(0.0, (t_k - cfg.delta) / cfg.delta))
    e_unweighted = e_l + e_o
    e_uav_side = e_x + e_u
    return e_unweighted, e_uav_side, p_k


def _combo_penalized(cfg, world, slot, serving, relay, rhos, us,
                     e_fly_min: float, p_dis: float, p_ob: float):
    """Penalized slot energy over broadcast per-user (rho, u) grids."""
    K = len(serving)
    e_unw = 0.0
    e_uav = 0.0
    p_sum = 0.0
    for k in range(K):
        eu, ew, pk = _user_components(cfg, world, slot, k, serving[k], relay[k],
                                      rhos[k], us[k])
        e_unw = e_unw + eu
        e_uav = e_uav + ew
        p_sum = p_sum + pk
    energy = e_unw + cfg.omega * (e_uav + e_fly_min)
    return energy * (p_sum / K) * p_dis * p_ob


def solve_slot(env: UavMecEnv, slot: FrozenSlot) -> dict:
    """Exhaustive combo search, grid + continuous polish over (rho, rate)."""
    cfg = env.cfg
    world = env.world
    K, M = cfg.K, cfg.M
    if K > 2 or M > 2 or cfg.Z > 2:
        raise ConfigError("oracle supports only K <= 2, M <= 2, Z <= 2")
    e_fly_min = M * min_propulsion_power(cfg) * cfg.delta
    p_dis, p_ob = frozen_penalty_consts(cfg, slot.positions)

    n_rho = RHO_GRID_POINTS if K == 1 else RHO_GRID_POINTS_2
    n_u = RATE_GRID_POINTS if K == 1 else RATE_GRID_POINTS_2
    rho_axis = np.linspace(0.0, 1.0, n_rho)
    u_axis = np.concatenate([[0.0], np.geomspace(0.02, 1.0, n_u - 1)])

    has_local = [bool(slot.local_mask[k, slot.task_types[k]]) for k in range(K)]
    grids = []
    for k in range(K):
        r = rho_axis if has_local[k] else np.array([1.0])
        rr, uu = np.meshgrid(r, u_axis, indexing="ij")
        grids.append((rr.ravel(), uu.ravel()))

    def broadcast(k, arr):
        shape = [1] * K
        shape[k] = arr.size
        return arr.reshape(shape)

    best = {"penalized_energy": np.inf}
    for placement in enumerate_feasible_placements(world.a_z, world.b_z,
                                                   world.A_m, world.B_m):
        host_sets = [np.nonzero(placement[:, slot.task_types[k]])[0]
                     for k in range(K)]
        for serving in itertools.product(*([range(M)] * K)):
            for relay in itertools.product(*host_sets):
                rhos = [broadcast(k, grids[k][0]) for k in range(K)]
                us = [broadcast(k, grids[k][1]) for k in range(K)]
                pen = _combo_penalized(cfg, world, slot, serving, relay,
                                       rhos, us, e_fly_min, p_dis, p_ob)
                flat_idx = np.unravel_index(np.argmin(pen), pen.shape)
                val = float(pen[flat_idx])
                rho0 = np.array([grids[k][0][flat_idx[k]] for k in range(K)])
                u0 = np.array([grids[k][1][flat_idx[k]] for k in range(K)])

                def objective(theta):
                    r = np.empty(K)
                    uu = np.empty(K)
                    for k in range(K):
                        r[k] = np.clip(theta[2 * k], 0.0, 1.0) if has_local[k] else 1.0
                        uu[k] = np.clip(theta[2 * k + 1], 1e-4, 1.0)
                    pts_r = [np.array([r[k]]) for k in range(K)]
                    pts_u = [np.array([uu[k]]) for k in range(K)]
                    return float(_combo_penalized(cfg, world, slot, serving,
                                                  relay, pts_r, pts_u,
                                                  e_fly_min, p_dis,
                                                  p_ob).ravel()[0])

                if np.all(u0 > 0):
                    theta0 = np.empty(2 * K)
                    theta0[0::2] = rho0
                    theta0[1::2] = u0
                    res = minimize(objective, theta0, method="Nelder-Mead",
                                   options={"xatol": 1e-6, "fatol": 1e-12,
                                            "maxiter": 600})
                    if res.fun < val:
                        val = float(res.fun)
                        rho0 = np.clip(res.x[0::2], 0.0, 1.0)
                        for k in range(K):
                            if not has_local[k]:
                                rho0[k] = 1.0
                        u0 = np.clip(res.x[1::2], 1e-4, 1.0)
                if val < best["penalized_energy"]:
                    best = {"penalized_energy": val,
                            "placement": placement.astype(int).tolist(),
                            "serving": list(map(int, serving)),
                            "relay": list(map(int, relay)),
                            "rho": rho0.tolist(),
                            "rate_fraction": u0.tolist()}
    return best


def action_penalized_energy(env: UavMecEnv, seed: int, action: np.ndarray) -> float:
    """Penalized slot energy (= -reward) of a decoded action on a frozen slot."""
    env.reset(seed=seed)
    _, r, _, _ = env.step(action)
    return -r


def run_oracle(env_factory, n_slots: int = 50, seed_base: int = 5000,
               policy_fn=None) -> dict:
    """Solve frozen slots; optionally report a policy's gap on each."""
    env = env_factory()
    slots = []
    for i in range(n_slots):
        slot = freeze_slot(env, seed_base + i)
        solution = solve_slot(env, slot)
        record = {"seed": slot.seed, "optimum": solution["penalized_energy"],
                  "solution": solution}
        if policy_fn is not None:
            a = policy_fn(slot.state)
            val = action_penalized_energy(env, slot.seed, a)
            record["policy_energy"] = val
            record["gap"] = ((val - solution["penalized_energy"])
                             / solution["penalized_energy"])
        slots.append(record)
    report = {"n_slots": n_slots, "seed_base": seed_base, "slots": slots,
              "mean_optimum": float(np.mean([s["optimum"] for s in slots]))}
    if policy_fn is not None:
        gaps = np.array([s["gap"] for s in slots])
        report["mean_gap"] = float(np.mean(gaps))
        report["within_15pct"] = float(np.mean(gaps <= 0.15))
    return report
