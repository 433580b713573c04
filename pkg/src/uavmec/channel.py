"""Wireless links: Rician-faded user-to-UAV channels and LoS UAV-to-UAV channels.

Power gains are |h|^2 so the mean user-UAV gain equals varpi / d^gamma.
Interference is zero in the default orthogonal mode; aggregate mode sums the
received powers of all other same-band transmitters at the receiver.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

NOISE_MINUS_85_DBM = 10 ** (-85 / 10) * 1e-3  # -85 dBm in watts


@dataclass
class ChannelParams:
    B0: float = 10e6                 # user-UAV bandwidth [Hz]
    B1: float = 10e6                 # UAV-UAV bandwidth [Hz]
    varpi: float = 1e-3              # reference path-loss coefficient (-30 dB at 1 m)
    gamma_pl: float = 2.2            # path-loss exponent
    phi_rice: float = 10.0           # Rician factor (linear)
    beta0: float = 1e-5              # UAV-UAV power gain at 1 m (-50 dB)
    sigma0_sq: float = NOISE_MINUS_85_DBM
    sigma1_sq: float = NOISE_MINUS_85_DBM
    interference_mode: str = "orthogonal"  # or "aggregate"

    def validate(self) -> None:
        if self.B0 <= 0 or self.B1 <= 0:
            raise ConfigError("bandwidths must be > 0")
        if self.sigma0_sq <= 0 or self.sigma1_sq <= 0:
            raise ConfigError("noise powers must be > 0")
        if self.phi_rice < 0:
            raise ConfigError("phi_rice must be >= 0")
        if self.gamma_pl < 2:
            raise ConfigError("gamma_pl must be >= 2")
        if self.varpi <= 0 or self.beta0 <= 0:
            raise ConfigError("varpi and beta0 must be > 0")
        if self.interference_mode not in ("orthogonal", "aggregate"):
            raise ConfigError("interference_mode must be orthogonal or aggregate")

    def with_overrides(self, **kw) -> "ChannelParams":
        return replace(self, **kw)


def sample_user_uav_gain(d_km: float, params: ChannelParams,
                         rng: np.random.Generator) -> float:
    """Draw one Rician |h|^2 power gain for a user-UAV link of length d_km."""
    if d_km <= 0:
        raise ValueError("link distance must be > 0")
    phi = params.phi_rice
    large_scale = np.sqrt(params.varpi / d_km ** params.gamma_pl)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    h_los = np.exp(1j * theta)
    h_nlos = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
    h = large_scale * (np.sqrt(phi / (phi + 1.0)) * h_los
                       + np.sqrt(1.0 / (phi + 1.0)) * h_nlos)
    return float(np.abs(h) ** 2)


def sample_user_uav_gains(dists: np.ndarray, params: ChannelParams,
                          rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw of |h|^2 for a K x M matrix of link distances."""
    d = np.asarray(dists, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distances must be > 0")
    phi = params.phi_rice
    large_scale = np.sqrt(params.varpi / d ** params.gamma_pl)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=d.shape)
    h_los = np.exp(1j * theta)
    h_nlos = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) / np.sqrt(2.0)
    h = large_scale * (np.sqrt(phi / (phi + 1.0)) * h_los
                       + np.sqrt(1.0 / (phi + 1.0)) * h_nlos)
    return np.abs(h) ** 2


def user_uav_rate(gain: float, p_k: float, interference: float,
                  params: ChannelParams) -> float:
    """Achievable uplink rate [bit/s]: B0 * log2(1 + gain*p/(I + sigma0^2))."""
    snr = gain * p_k / (interference + params.sigma0_sq)
    return params.B0 * np.log2(1.0 + snr)


def uav_uav_gain(q_m: np.ndarray, q_n: np.ndarray, params: ChannelParams) -> float:
    """LoS inter-UAV power gain beta0 / d^2 (distance clamped below 1 m)."""
    d = float(np.linalg.norm(np.asarray(q_m, dtype=float) - np.asarray(q_n, dtype=float)))
    if d == 0:
        raise ValueError("coincident UAV positions have no defined link gain")
    return params.beta0 / max(d, 1.0) ** 2


def uav_uav_rate(gain: float, p_tx: float, interference: float,
                 params: ChannelParams) -> float:
    """Achievable inter-UAV rate [bit/s]: B1 * log2(1 + gain*P/(I + sigma1^2))."""
    snr = gain * p_tx / (interference + params.sigma1_sq)
    return params.B1 * np.log2(1.0 + snr)


def user_uav_rate_matrix(user_pos: np.ndarray, uav_pos: np.ndarray, p_k: float,
                         params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Sample fading and return the K x M uplink rate matrix for one slot."""
    diff = user_pos[:, None, :] - uav_pos[None, :, :]
    dists = np.linalg.norm(diff, axis=2)
    gains = sample_user_uav_gains(dists, params, rng)
    if params.interference_mode == "aggregate":
        # received power at UAV m from every user, minus the intended one
        rx = gains * p_k
        interference = rx.sum(axis=0, keepdims=True) - rx
    else:
        interference = np.zeros_like(gains)
    return params.B0 * np.log2(1.0 + gains * p_k / (interference + params.sigma0_sq))


def uav_uav_rate_matrix(uav_pos: np.ndarray, p_tx: float,
                        params: ChannelParams) -> np.ndarray:
    """M x M inter-UAV rate matrix (diagonal is zero: no self-link)."""
    M = uav_pos.shape[0]
    rates = np.zeros((M, M))
    gains = np.zeros((M, M))
    for m in range(M):
        for n in range(M):
            if m != n:
                gains[m, n] = uav_uav_gain(uav_pos[m], uav_pos[n], params)
    for m in range(M):
        for n in range(M):
            if m == n:
                continue
            if params.interference_mode == "aggregate":
                others = [gains[mm, n] * p_tx for mm in range(M) if mm not in (m, n)]
                interference = float(np.sum(others))
            else:
                interference = 0.0
            rates[m, n] = uav_uav_rate(gains[m, n], p_tx, interference, params)
    return rates
