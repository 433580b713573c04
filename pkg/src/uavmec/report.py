"""Figure rendering for the report paths: every CSV the CLI emits gets a
matplotlib rendering saved next to it."""
from __future__ import annotations

import csv
import os

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return rows


def render_training_curves(log_csv, out_png) -> str:
    rows = _read_csv(log_csv)
    ep = np.array([int(r["episode"]) for r in rows])
    ret = np.array([float(r["return"]) for r in rows])
    e_w = np.array([float(r["e_weighted"]) for r in rows])
    alpha = np.array([float(r["alpha"]) for r in rows])

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    axes[0].plot(ep, ret, lw=0.8, color="tab:blue")
    if len(ret) >= 10:
        kernel = np.ones(10) / 10
        axes[0].plot(ep[9:], np.convolve(ret, kernel, mode="valid"),
                     lw=1.8, color="tab:red", label="10-ep moving avg")
        axes[0].legend(fontsize=8)
    axes[0].set_xlabel("episode")
    axes[0].set_ylabel("return")
    axes[1].plot(ep, e_w, lw=0.8, color="tab:green")
    axes[1].set_xlabel("episode")
    axes[1].set_ylabel("weighted energy per episode [J]")
    axes[2].plot(ep, alpha, lw=0.8, color="tab:purple")
    axes[2].set_xlabel("episode")
    axes[2].set_ylabel("temperature")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return str(out_png)


def render_trajectories(traj_csv, out_png, x_min=None, x_max=None) -> str:
    rows = _read_csv(traj_csv)
    uavs = sorted({int(r["uav"]) for r in rows})
    fig, ax = plt.subplots(figsize=(5.2, 5))
    cmap = plt.get_cmap("tab10")
    for m in uavs:
        pts = np.array([[float(r["x"]), float(r["y"])]
                        for r in rows if int(r["uav"]) == m])
        ax.plot(pts[:, 0], pts[:, 1], lw=0.9, color=cmap(m % 10), label=f"UAV {m}")
        ax.scatter(*pts[0], marker="o", color=cmap(m % 10), s=30)
        ax.scatter(*pts[-1], marker="x", color=cmap(m % 10), s=40)
    if x_min is not None and x_max is not None:
        ax.plot([x_min, x_max, x_max, x_min, x_min],
                [x_min, x_min, x_max, x_max, x_min],
                color="gray", lw=1.0, ls="--")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return str(out_png)


def render_energy_components(summary: dict, out_png) -> str:
    labels = ["local", "uplink", "relay", "uav compute", "propulsion"]
    keys = ["mean_e_local", "mean_e_uplink", "mean_e_relay",
            "mean_e_uav_compute", "mean_e_fly"]
    values = [summary[k] for k in keys]
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    ax.bar(labels, values, color="tab:blue")
    ax.set_ylabel("mean energy per slot [J]")
    ax.tick_params(axis="x", labelrotation=20)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return str(out_png)


def render_trace_timeline(trace_jsonl, out_png) -> str:
    """Per-slot weighted energy and penalty multipliers from a JSONL trace."""
    import json

    records = []
    with open(trace_jsonl) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    t = np.array([r["t"] for r in records])
    energy = np.array([r["e_weighted_total"] for r in records])
    fig, axes = plt.subplots(2, 1, figsize=(7, 4.6), sharex=True)
    axes[0].plot(t, energy, lw=0.8, color="tab:green")
    axes[0].set_ylabel("weighted energy [J]")
    for key, color in (("p_tm", "tab:red"), ("p_dis", "tab:orange"),
                       ("p_ob", "tab:purple")):
        axes[1].plot(t, [r[key] for r in records], lw=0.8, color=color,
                     label=key)
    axes[1].set_xlabel("slot")
    axes[1].set_ylabel("penalty multiplier")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return str(out_png)


def render_sweep(sweep_csv, out_png, axis_name: str) -> str:
    rows = _read_csv(sweep_csv)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    modes = sorted({r["mode"] for r in rows})
    for mode in modes:
        pts = {}
        for r in rows:
            if r["mode"] != mode:
                continue
            pts.setdefault(float(r["value"]), []).append(
                float(r["mean_weighted_energy"]))
        xs = sorted(pts)
        ys = [np.mean(pts[x]) for x in xs]
        ax.plot(xs, ys, marker="o", label=mode)
    ax.set_xlabel(axis_name)
    ax.set_ylabel("mean weighted energy per slot [J]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return str(out_png)
