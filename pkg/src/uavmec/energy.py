"""Per-slot delay and energy along the local / uplink / relay / UAV-compute
pipeline, and the omega-weighted slot total.

The local and offload branches run in parallel; the offload stages are
sequential.  Branches that cannot be served (zero rate or zero frequency with
a positive load) report a finite timeout-sentinel delay of TIMEOUT_FACTOR
slot durations instead of infinity so rewards stay finite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIMEOUT_FACTOR = 10.0


@dataclass
class TaskSpec:
    d: float      # task size [bits]
    z: int        # type index
    c_z: float    # processing density [cycles/bit]


@dataclass
class SlotDecision:
    """Decoded per-slot controls for every user and UAV."""

    serving: np.ndarray        # K, serving UAV m per user
    rho: np.ndarray            # K, offload ratios in [0, 1]
    relay: np.ndarray          # K, compute UAV n per user (may equal serving)
    f_uav: np.ndarray          # K, UAV cycles/s allocated to each user's task
    f_user: np.ndarray         # K, local cycles/s (just-in-time, capped at F_k)
    velocities: np.ndarray     # M x 3 commanded UAV velocities


@dataclass
class EnergyBreakdown:
    e_local: float = 0.0
    e_uplink: float = 0.0
    e_relay: float = 0.0
    e_uav_compute: float = 0.0
    e_fly: float = 0.0
    e_weighted_total: float = 0.0

    @staticmethod
    def combine(e_local, e_uplink, e_relay, e_uav_compute, e_fly, omega) -> "EnergyBreakdown":
        total = (e_local + e_uplink) + omega * (e_relay + e_uav_compute + e_fly)
        return EnergyBreakdown(e_local, e_uplink, e_relay, e_uav_compute, e_fly, total)


def local_delay_energy(task: TaskSpec, rho_k: float, f_user: float,
                       kappa: float) -> tuple[float, float]:
    """Delay and energy of the locally computed share d*(1 - rho)."""
    d_local = task.d * (1.0 - rho_k)
    if d_local <= 0.0:
        return 0.0, 0.0
    if f_user <= 0.0:
        raise ValueError("local share is positive but f_user is 0")
    t = d_local * task.c_z / f_user
    e = kappa * d_local * task.c_z * f_user ** 2
    return t, e


def uplink_delay_energy(task: TaskSpec, rho_k: float, rate_km: float,
                        p_k: float, delta: float) -> tuple[float, float]:
    """Delay and transmit energy of sending the offloaded share to the UAV."""
    d_off = task.d * rho_k
    if d_off <= 0.0:
        return 0.0, 0.0
    if rate_km <= 0.0:
        return TIMEOUT_FACTOR * delta, 0.0
    t = d_off / rate_km
    return t, p_k * t


def relay_delay_energy(task: TaskSpec, rho_k: float, m: int, n: int,
                       rate_mn: float, p_m_tx: float, delta: float) -> tuple[float, float]:
    """Delay and energy of forwarding the task from UAV m to UAV n."""
    if m == n:
        return 0.0, 0.0
    d_off = task.d * rho_k
    if d_off <= 0.0:
        return 0.0, 0.0
    if rate_mn <= 0.0:
        return TIMEOUT_FACTOR * delta, 0.0
    t = d_off / rate_mn
    return t, p_m_tx * t


def uav_compute_delay_energy(task: TaskSpec, rho_k: float, f_nkz: float,
                             kappa: float, delta: float) -> tuple[float, float]:
    """Delay and energy of computing the offloaded share on the hosting UAV."""
    d_off = task.d * rho_k
    if d_off <= 0.0:
        return 0.0, 0.0
    if f_nkz <= 0.0:
        return TIMEOUT_FACTOR * delta, 0.0
    t = d_off * task.c_z / f_nkz
    e = kappa * task.c_z * d_off * f_nkz ** 2
    return t, e


def total_user_delay(t_local: float, t_uplink: float, t_relay: float,
                     t_uav: float) -> float:
    """Local branch in parallel with the sequential offload chain."""
    return max(t_local, t_uplink + t_relay + t_uav)


def slot_energy(e_local: float, e_uplink: float, e_relay: float,
                e_uav_compute: float, e_fly: float, omega: float) -> EnergyBreakdown:
    """Weighted slot total: user-side energy plus omega x UAV-side energy."""
    return EnergyBreakdown.combine(e_local, e_uplink, e_relay, e_uav_compute,
                                   e_fly, omega)
