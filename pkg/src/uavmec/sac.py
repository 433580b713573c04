"""Soft actor-critic with twin Q-networks, automatic temperature and a ring
replay buffer, trained against the slot simulator.

Targets use the elementwise minimum of the two target critics minus the
entropy term; target parameters move only through Polyak averaging.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .nn import (Adam, GaussianPolicy, Mlp, load_checkpoint, save_checkpoint)


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer; batches are drawn uniformly without
    replacement."""

    def __init__(self, capacity: int, state_dim: int, act_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity)
        self.idx = 0
        self.size = 0

    def push(self, s, a, r, s_next, done) -> None:
        i = self.idx
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.done[i] = float(done)
        self.idx = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.choice(self.size, size=min(batch, self.size), replace=False)
        return {"s": self.s[idx], "a": self.a[idx], "r": self.r[idx],
                "s_next": self.s_next[idx], "done": self.done[idx]}


@dataclass
class SacConfig:
    gamma: float = 0.98
    lr_actor: float = 5e-4
    lr_critic: float = 5e-4
    lr_alpha: float = 5e-4
    batch_size: int = 256
    polyak_eps: float = 0.005
    target_entropy: float | None = None   # defaults to -act_dim
    episodes: int = 600
    updates_per_episode: int | None = None  # defaults to the episode length
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 20000
    init_alpha: float = 1.0
    eval_every: int = 10
    eval_episodes: int = 5
    seed: int = 0

    def validate(self) -> None:
        assert 0.0 <= self.gamma < 1.0, "gamma must be in [0, 1)"
        assert 0.0 < self.polyak_eps <= 1.0, "polyak_eps must be in (0, 1]"
        assert self.batch_size <= self.buffer_capacity

    def with_overrides(self, **kw) -> "SacConfig":
        return replace(self, **kw)


def soft_update(targets: list[np.ndarray], onlines: list[np.ndarray],
                epsilon: float) -> None:
    """Polyak step: target <- eps*online + (1-eps)*target, elementwise."""
    for t, o in zip(targets, onlines):
        t *= (1.0 - epsilon)
        t += epsilon * o


def _clone_params(net: Mlp, rng) -> Mlp:
    twin = Mlp(net.sizes, rng)
    for tp, p in zip(twin.params, net.params):
        tp[...] = p
    return twin


class SacAgent:
    def __init__(self, state_dim: int, act_dim: int, cfg: SacConfig,
                 rng: np.random.Generator):
        cfg.validate()
        self.cfg = cfg
        self.state_dim = state_dim
        self.act_dim = act_dim
        self.target_entropy = (cfg.target_entropy if cfg.target_entropy is not None
                               else -float(act_dim))
        h = list(cfg.hidden)
        self.actor = GaussianPolicy(state_dim, act_dim, tuple(h), rng)
        self.q1 = Mlp([state_dim + act_dim, *h, 1], rng)
        self.q2 = Mlp([state_dim + act_dim, *h, 1], rng)
        self.q1_target = _clone_params(self.q1, rng)
        self.q2_target = _clone_params(self.q2, rng)
        self.log_alpha = np.array([np.log(cfg.init_alpha)])
        self.opt_actor = Adam(self.actor.net.params, lr=cfg.lr_actor)
        self.opt_q1 = Adam(self.q1.params, lr=cfg.lr_critic)
        self.opt_q2 = Adam(self.q2.params, lr=cfg.lr_critic)
        self.opt_alpha = Adam([self.log_alpha], lr=cfg.lr_alpha)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a, _, _ = self.actor.sample(state, rng)
        return a[0]

    def act_deterministic(self, state: np.ndarray) -> np.ndarray:
        return self.actor.deterministic(state)[0]

    # ------------------------------------------------------------------
    def critic_loss_and_grads(self, batch: dict, rng: np.random.Generator):
        """Soft Bellman residual; the target is frozen (no gradient)."""
        if batch["s"].shape[0] == 0:
            raise ValueError("empty batch")
        B = batch["s"].shape[0]
        a_next, logp_next, _ = self.actor.sample(batch["s_next"], rng)
        sa_next = np.concatenate([batch["s_next"], a_next], axis=1)
        q1_t = self.q1_target(sa_next)[:, 0]
        q2_t = self.q2_target(sa_next)[:, 0]
        q_next = np.minimum(q1_t, q2_t) - self.alpha * logp_next
        y = batch["r"] + self.cfg.gamma * (1.0 - batch["done"]) * q_next

        sa = np.concatenate([batch["s"], batch["a"]], axis=1)
        losses = []
        grads = []
        for net in (self.q1, self.q2):
            q, cache = net.forward(sa)
            resid = q[:, 0] - y
            losses.append(0.5 * float(np.mean(resid ** 2)))
            g, _ = net.backward(cache, (resid / B)[:, None])
            grads.append(g)
        return losses, grads, y

    def critic_update(self, batch: dict, rng: np.random.Generator) -> float:
        losses, grads, _ = self.critic_loss_and_grads(batch, rng)
        self.opt_q1.step(self.q1.params, grads[0])
        self.opt_q2.step(self.q2.params, grads[1])
        return float(np.mean(losses))

    # ------------------------------------------------------------------
    def actor_loss_and_grads(self, batch: dict, rng: np.random.Generator):
        """mean(alpha*logp - min Q) with gradients through the sample."""
        B = batch["s"].shape[0]
        a, logp, aux = self.actor.sample(batch["s"], rng)
        sa = np.concatenate([batch["s"], a], axis=1)
        q1, cache1 = self.q1.forward(sa)
        q2, cache2 = self.q2.forward(sa)
        q1 = q1[:, 0]
        q2 = q2[:, 0]
        qmin = np.minimum(q1, q2)
        loss = float(np.mean(self.alpha * logp - qmin))

        # route -1/B through whichever critic attains the minimum
        sel1 = (q1 <= q2).astype(float)
        _, g_in1 = self.q1.backward(cache1, (-sel1 / B)[:, None])
        _, g_in2 = self.q2.backward(cache2, (-(1.0 - sel1) / B)[:, None])
        grad_a = g_in1[:, self.state_dim:] + g_in2[:, self.state_dim:]
        grad_logp = np.full(B, self.alpha / B)
        grads, _ = self.actor.backward(aux, grad_a, grad_logp)
        return loss, grads, logp

    def actor_update(self, batch: dict, rng: np.random.Generator):
        loss, grads, logp = self.actor_loss_and_grads(batch, rng)
        self.opt_actor.step(self.actor.net.params, grads)
        alpha_loss = self.temperature_update(logp)
        return loss, alpha_loss

    # ------------------------------------------------------------------
    def temperature_loss_and_grad(self, logp: np.ndarray):
        """L(alpha) = mean(-alpha*logp - alpha*H*), gradient on log alpha."""
        alpha = self.alpha
        loss = float(np.mean(-alpha * logp - alpha * self.target_entropy))
        grad = np.array([-alpha * float(np.mean(logp + self.target_entropy))])
        return loss, grad

    def temperature_update(self, logp: np.ndarray) -> float:
        loss, grad = self.temperature_loss_and_grad(logp)
        self.opt_alpha.step([self.log_alpha], [grad])
        return loss

    # ------------------------------------------------------------------
    def sync_targets(self) -> None:
        soft_update(self.q1_target.params, self.q1.params, self.cfg.polyak_eps)
        soft_update(self.q2_target.params, self.q2.params, self.cfg.polyak_eps)

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator):
        batch = buffer.sample(self.cfg.batch_size, rng)
        loss_q = self.critic_update(batch, rng)
        loss_pi, loss_alpha = self.actor_update(batch, rng)
        self.sync_targets()
        if not (np.isfinite(loss_q) and np.isfinite(loss_pi)
                and np.isfinite(loss_alpha) and np.isfinite(self.alpha)):
            raise RuntimeError("non-finite loss encountered during update")
        for net in (self.actor.net, self.q1, self.q2):
            for p in net.params:
                if not np.all(np.isfinite(p)):
                    raise RuntimeError("non-finite network parameter after update")
        return loss_q, loss_pi

    # ------------------------------------------------------------------
    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        arrays = {"log_alpha": self.log_alpha}
        for name, net in (("actor", self.actor.net), ("q1", self.q1),
                          ("q2", self.q2), ("q1t", self.q1_target),
                          ("q2t", self.q2_target)):
            for i, p in enumerate(net.params):
                arrays[f"{name}_{i}"] = p
        for name, opt in (("oa", self.opt_actor), ("o1", self.opt_q1),
                          ("o2", self.opt_q2), ("oal", self.opt_alpha)):
            for i, m in enumerate(opt.m):
                arrays[f"{name}_m{i}"] = m
            for i, v in enumerate(opt.v):
                arrays[f"{name}_v{i}"] = v
            arrays[f"{name}_t"] = np.array([opt.t], dtype=float)
        return arrays

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.log_alpha[...] = arrays["log_alpha"]
        for name, net in (("actor", self.actor.net), ("q1", self.q1),
                          ("q2", self.q2), ("q1t", self.q1_target),
                          ("q2t", self.q2_target)):
            for i, p in enumerate(net.params):
                p[...] = arrays[f"{name}_{i}"]
        for name, opt in (("oa", self.opt_actor), ("o1", self.opt_q1),
                          ("o2", self.opt_q2), ("oal", self.opt_alpha)):
            for i, m in enumerate(opt.m):
                m[...] = arrays[f"{name}_m{i}"]
            for i, v in enumerate(opt.v):
                v[...] = arrays[f"{name}_v{i}"]
            opt.t = int(arrays[f"{name}_t"][0])


def save_agent(path, agent: SacAgent, rng: np.random.Generator,
               extra_meta: dict | None = None) -> None:
    meta = {
        "state_dim": agent.state_dim,
        "act_dim": agent.act_dim,
        "hidden": list(agent.cfg.hidden),
        "target_entropy": agent.target_entropy,
        "rng_state": rng.bit_generator.state,
    }
    if extra_meta:
        meta.update(extra_meta)
    save_checkpoint(path, agent.checkpoint_arrays(), meta)


def load_agent(path, cfg: SacConfig | None = None) -> tuple[SacAgent, dict]:
    arrays, meta = load_checkpoint(path)
    cfg = cfg or SacConfig()
    cfg = cfg.with_overrides(hidden=tuple(meta["hidden"]),
                             target_entropy=meta["target_entropy"])
    agent = SacAgent(meta["state_dim"], meta["act_dim"], cfg,
                     np.random.default_rng(0))
    agent.load_arrays(arrays)
    return agent, meta


# ----------------------------------------------------------------------
# training loop

LOG_COLUMNS = ["episode", "steps", "return", "e_local", "e_uplink", "e_relay",
               "e_uav", "e_fly", "e_weighted", "p_tm_rate", "p_dis_rate",
               "p_ob_rate", "alpha", "loss_q", "loss_pi"]

EVAL_SEED_BASE = 900_000
PENALTY_TOL = 1e-9


def rollout_episode(env, policy_fn, seed: int, collect=None):
    """Run one episode; policy_fn(state) -> action.  Returns episode stats."""
    s = env.reset(seed=seed)
    total_reward = 0.0
    sums = np.zeros(6)  # local, uplink, relay, uav, fly, weighted
    pen_hits = np.zeros(3)
    steps = 0
    done = False
    while not done:
        a = policy_fn(s)
        s_next, r, done, info = env.step(a)
        if collect is not None:
            collect(s, a, r, s_next, done, info)
        e = info["energy"]
        p = info["penalties"]
        sums += [e.e_local, e.e_uplink, e.e_relay, e.e_uav_compute, e.e_fly,
                 e.e_weighted_total]
        pen_hits += [p.p_tm > 1 + PENALTY_TOL, p.p_dis > 1 + PENALTY_TOL,
                     p.p_ob > 1 + PENALTY_TOL]
        total_reward += r
        steps += 1
        s = s_next
    return {"return": total_reward, "steps": steps, "energy_sums": sums,
            "penalty_rates": pen_hits / max(steps, 1)}


def evaluate_policy(env, policy_fn, episodes: int, seed_base: int = EVAL_SEED_BASE):
    """Deterministic evaluation episodes on held-out seeds."""
    stats = [rollout_episode(env, policy_fn, seed=seed_base + i)
             for i in range(episodes)]
    returns = np.array([s["return"] for s in stats])
    sums = np.stack([s["energy_sums"] for s in stats])
    rates = np.stack([s["penalty_rates"] for s in stats])
    steps = np.array([s["steps"] for s in stats])
    per_slot = sums / steps[:, None]
    return {
        "episodes": episodes,
        "mean_return": float(np.mean(returns)),
        "returns": returns.tolist(),
        "mean_weighted_energy": float(np.mean(per_slot[:, 5])),
        "mean_e_local": float(np.mean(per_slot[:, 0])),
        "mean_e_uplink": float(np.mean(per_slot[:, 1])),
        "mean_e_relay": float(np.mean(per_slot[:, 2])),
        "mean_e_uav_compute": float(np.mean(per_slot[:, 3])),
        "mean_e_fly": float(np.mean(per_slot[:, 4])),
        "p_tm_rate": float(np.mean(rates[:, 0])),
        "p_dis_rate": float(np.mean(rates[:, 1])),
        "p_ob_rate": float(np.mean(rates[:, 2])),
    }


def train(env_factory, cfg: SacConfig, out_dir, progress: bool = False) -> dict:
    """Run the full training loop; writes the CSV log and checkpoints.

    env_factory() must build a fresh environment instance.  Returns a dict
    with the log rows and artifact paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    env = env_factory()
    eval_env = env_factory()
    rng = np.random.default_rng([cfg.seed, 7])
    agent = SacAgent(env.state_dim, env.action_dim, cfg, rng)
    buffer = ReplayBuffer(cfg.buffer_capacity, env.state_dim, env.action_dim)
    updates = (cfg.updates_per_episode if cfg.updates_per_episode is not None
               else env.cfg.T)

    log_path = os.path.join(out_dir, "training_log.csv")
    best_path = os.path.join(out_dir, "checkpoint_best.npz")
    last_path = os.path.join(out_dir, "checkpoint_last.npz")
    rows = []
    best_eval = -np.inf
    eval_history = []

    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for ep in range(1, cfg.episodes + 1):
            def store(s, a, r, s2, d, info):
                buffer.push(s, a, r, s2, d)

            stats = rollout_episode(env, lambda s: agent.act(s, rng),
                                    seed=ep, collect=store)
            losses_q, losses_pi = [], []
            if buffer.size >= cfg.batch_size:
                for _ in range(updates):
                    lq, lp = agent.update(buffer, rng)
                    losses_q.append(lq)
                    losses_pi.append(lp)
            row = [ep, stats["steps"], stats["return"], *stats["energy_sums"],
                   *stats["penalty_rates"], agent.alpha,
                   float(np.mean(losses_q)) if losses_q else 0.0,
                   float(np.mean(losses_pi)) if losses_pi else 0.0]
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in row])
            rows.append(dict(zip(LOG_COLUMNS, row)))
            if progress and ep % 10 == 0:
                print(f"  ep {ep:4d} return {stats['return']:.2f} "
                      f"alpha {agent.alpha:.4f}")
            if ep % cfg.eval_every == 0 or ep == cfg.episodes:
                ev = evaluate_policy(eval_env, agent.act_deterministic,
                                     cfg.eval_episodes)
                ev["episode"] = ep
                eval_history.append(ev)
                if ev["mean_return"] > best_eval:
                    best_eval = ev["mean_return"]
                    save_agent(best_path, agent, rng,
                               {"episode": ep, "eval": ev})
    save_agent(last_path, agent, rng, {"episode": cfg.episodes})
    with open(os.path.join(out_dir, "eval_history.json"), "w") as fh:
        json.dump(eval_history, fh, indent=1)
    return {"log_path": log_path, "best_checkpoint": best_path,
            "last_checkpoint": last_path, "rows": rows,
            "eval_history": eval_history, "best_eval_return": best_eval}
