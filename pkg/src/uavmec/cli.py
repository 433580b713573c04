"""Command line entry points: train | eval | sweep | oracle.

Exit codes: 0 success, 2 configuration error, 3 artifact error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .config import (ExperimentSpec, apply_axis_value, load_spec, resolve_axis,
                     write_manifest)
from .env import UavMecEnv, trace_record
from .errors import ArtifactError, ConfigError
from .oracle import run_oracle
from .sac import evaluate_policy, load_agent, rollout_episode, train


def build_env_factory(spec: ExperimentSpec, seed: int | None = None):
    scenario = spec.scenario if seed is None else spec.scenario.with_overrides(seed=seed)
    env_mode = spec.mode if spec.mode != "random" else "sac"
    return lambda: UavMecEnv(scenario, spec.channel, mode=env_mode,
                             fix_scheduling=spec.fix_scheduling)


def random_policy(action_dim: int, seed: int):
    rng = np.random.default_rng([seed, 13])
    return lambda state: rng.uniform(-1.0, 1.0, action_dim)


def _policy_for(spec: ExperimentSpec, env, seed: int, checkpoint):
    if spec.mode == "random":
        return random_policy(env.action_dim, seed)
    if checkpoint is None:
        raise ConfigError(f"mode {spec.mode!r} requires --checkpoint")
    agent, _ = load_agent(checkpoint)
    if agent.state_dim != env.state_dim or agent.act_dim != env.action_dim:
        raise ArtifactError(
            f"checkpoint dimensions ({agent.state_dim}, {agent.act_dim}) do not "
            f"match the scenario ({env.state_dim}, {env.action_dim})")
    return agent.act_deterministic


# ----------------------------------------------------------------------
def cmd_train(spec: ExperimentSpec, args) -> int:
    if spec.mode == "random":
        raise ConfigError("the random baseline is not trained; use eval")
    for seed in spec.seeds:
        out_dir = os.path.join(spec.out, spec.mode, str(seed))
        os.makedirs(out_dir, exist_ok=True)
        write_manifest(os.path.join(out_dir, "manifest.json"), spec, seed,
                       {"command": "train"})
        cfg = replace(spec.sac, seed=seed)
        factory = build_env_factory(spec)
        print(f"[train] mode={spec.mode} seed={seed} -> {out_dir}")
        result = train(factory, cfg, out_dir, progress=args.verbose)
        print(f"[train] best eval return {result['best_eval_return']:.3f}")
        if spec.figures:
            from .report import render_training_curves
            png = render_training_curves(result["log_path"],
                                         os.path.join(out_dir, "reward_curve.png"))
            print(f"[train] wrote {png}")
    return 0


def cmd_eval(spec: ExperimentSpec, args) -> int:
    for seed in spec.seeds:
        out_dir = os.path.join(spec.out, "eval", spec.mode, str(seed))
        os.makedirs(out_dir, exist_ok=True)
        write_manifest(os.path.join(out_dir, "manifest.json"), spec, seed,
                       {"command": "eval", "checkpoint": args.checkpoint})
        factory = build_env_factory(spec)
        env = factory()
        policy = _policy_for(spec, env, seed, args.checkpoint)

        traj_rows = []
        trace_fh = open(os.path.join(out_dir, "trace.jsonl"), "w") if spec.trace else None
        global_t = 0

        def collect(s, a, r, s_next, done, info):
            nonlocal global_t
            for m, q in enumerate(info["positions"]):
                traj_rows.append([global_t, m, q[0], q[1], q[2]])
            if trace_fh is not None:
                trace_fh.write(json.dumps(trace_record(global_t, r, info)) + "\n")
            global_t += 1

        stats = []
        for i in range(spec.eval_episodes):
            stats.append(rollout_episode(env, policy, seed=900_000 + i,
                                         collect=collect))
        if trace_fh is not None:
            trace_fh.close()

        returns = np.array([s["return"] for s in stats])
        sums = np.stack([s["energy_sums"] for s in stats])
        rates = np.stack([s["penalty_rates"] for s in stats])
        steps = np.array([s["steps"] for s in stats])
        per_slot = sums / steps[:, None]
        summary = {
            "mode": spec.mode,
            "seed": seed,
            "episodes": spec.eval_episodes,
            "mean_return": float(np.mean(returns)),
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
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=1)
        traj_path = os.path.join(out_dir, "trajectory.csv")
        with open(traj_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "uav", "x", "y", "z"])
            for row in traj_rows:
                writer.writerow([row[0], row[1], f"{row[2]:.6f}",
                                 f"{row[3]:.6f}", f"{row[4]:.6f}"])
        print(f"[eval] mode={spec.mode} seed={seed} mean weighted energy "
              f"{summary['mean_weighted_energy']:.3f} J/slot -> {out_dir}")
        if spec.figures:
            from .report import (render_energy_components,
                                 render_trace_timeline, render_trajectories)
            render_trajectories(traj_path, os.path.join(out_dir, "trajectory.png"),
                                spec.scenario.X_min, spec.scenario.X_max)
            render_energy_components(summary,
                                     os.path.join(out_dir, "energy_components.png"))
            if spec.trace:
                render_trace_timeline(os.path.join(out_dir, "trace.jsonl"),
                                      os.path.join(out_dir, "trace_timeline.png"))
    return 0


def cmd_sweep(spec: ExperimentSpec, args) -> int:
    if spec.sweep_axis is None:
        raise ConfigError("sweep requires sweep_axis and sweep_values in [experiment]")
    resolve_axis(spec, spec.sweep_axis)  # validate before any run
    rows = []
    for value in spec.sweep_values:
        for mode in spec.modes:
            for seed in spec.seeds:
                sub = apply_axis_value(spec, spec.sweep_axis, value)
                sub = replace(sub, mode=mode)
                label = f"{spec.sweep_axis}={value:g}"
                out_dir = os.path.join(spec.out, "sweep", label, mode, str(seed))
                os.makedirs(out_dir, exist_ok=True)
                write_manifest(os.path.join(out_dir, "manifest.json"), sub, seed,
                               {"command": "sweep", "axis": spec.sweep_axis,
                                "value": value})
                factory = build_env_factory(sub)
                env = factory()
                if mode == "random":
                    policy = random_policy(env.action_dim, seed)
                else:
                    cfg = replace(sub.sac, seed=seed)
                    result = train(factory, cfg, out_dir)
                    agent, _ = load_agent(result["best_checkpoint"])
                    policy = agent.act_deterministic
                ev = evaluate_policy(env, policy, sub.eval_episodes)
                rows.append([value, mode, seed, ev["mean_weighted_energy"]])
                print(f"[sweep] {label} mode={mode} seed={seed} "
                      f"energy {ev['mean_weighted_energy']:.3f} J/slot")
    os.makedirs(spec.out, exist_ok=True)
    sweep_path = os.path.join(spec.out, "sweep", "sweep.csv")
    os.makedirs(os.path.dirname(sweep_path), exist_ok=True)
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "mode", "seed", "mean_weighted_energy"])
        for row in rows:
            writer.writerow([f"{row[0]:g}", row[1], row[2], f"{row[3]:.10g}"])
    print(f"[sweep] wrote {sweep_path}")
    if spec.figures:
        from .report import render_sweep
        render_sweep(sweep_path, os.path.join(spec.out, "sweep", "sweep.png"),
                     spec.sweep_axis)
    return 0


def cmd_oracle(spec: ExperimentSpec, args) -> int:
    factory = build_env_factory(spec)
    policy_fn = None
    if args.checkpoint is not None:
        env = factory()
        policy_fn = _policy_for(spec, env, spec.seeds[0], args.checkpoint)
    elif spec.mode == "random":
        env = factory()
        policy_fn = random_policy(env.action_dim, spec.seeds[0])
    report = run_oracle(factory, n_slots=args.slots, policy_fn=policy_fn)
    os.makedirs(spec.out, exist_ok=True)
    path = os.path.join(spec.out, "oracle_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1)
    print(f"[oracle] mean optimum {report['mean_optimum']:.3f} J over "
          f"{report['n_slots']} slots -> {path}")
    if "mean_gap" in report:
        print(f"[oracle] policy mean gap {report['mean_gap'] * 100:.1f}%, "
              f"within 15%: {report['within_15pct'] * 100:.0f}% of slots")
    return 0


# ----------------------------------------------------------------------
def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavmec",
        description="Multi-UAV edge computing simulator and SAC trainer")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("train", "train a policy"),
                            ("eval", "evaluate a policy deterministically"),
                            ("sweep", "train/evaluate across a parameter sweep"),
                            ("oracle", "brute-force small frozen slots")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--seed", type=int, action="append", default=None,
                       help="seed (repeatable)")
        p.add_argument("--mode", choices=["sac", "fsp", "era", "random"],
                       default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--trace", action="store_true",
                       help="write a per-step JSON-lines trace (eval)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
        p.add_argument("--verbose", action="store_true")
        if name in ("eval", "oracle"):
            p.add_argument("--checkpoint", default=None)
        if name == "oracle":
            p.add_argument("--slots", type=int, default=50)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        spec = load_spec(args.config)
        if args.seed:
            spec = replace(spec, seeds=list(args.seed))
        if args.mode:
            modes = spec.modes if spec.modes != ["sac"] else [args.mode]
            spec = replace(spec, mode=args.mode, modes=modes)
        if args.out:
            spec = replace(spec, out=args.out)
        if args.trace:
            spec = replace(spec, trace=True)
        if args.no_figures:
            spec = replace(spec, figures=False)
        spec.validate()
        handler = {"train": cmd_train, "eval": cmd_eval,
                   "sweep": cmd_sweep, "oracle": cmd_oracle}[args.command]
        return handler(spec, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
