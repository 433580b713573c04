"""Scenario construction, UAV kinematics and rotary-wing propulsion power.

Geometry convention: users sit on the ground plane (z = 0) inside the square
service area [X_min, X_max]^2, UAVs fly between H_min and H_max.  Horizontal
excursions outside the area are allowed but penalized; altitude is clipped.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ScenarioInfeasibleError

GB = 8e9  # bits per gigabyte (decimal)


@dataclass
class ScenarioConfig:
    """Physical, task and penalty constants plus counts for one scenario."""

    K: int = 20                # users
    M: int = 5                 # UAVs
    Z: int = 5                 # task/service types
    T: int = 200               # slots per episode
    delta: float = 1.0         # slot duration [s]

    # flight envelope
    v_max: float = 35.0        # max UAV speed [m/s]
    d_dim: float = 3.0         # safety distance [m]
    H_min: float = 100.0
    H_max: float = 200.0
    X_min: float = 0.0
    X_max: float = 500.0
    W: float = 100.0           # out-of-bounds penalty scale [m]

    # energy weighting
    omega: float = 0.5         # weight on UAV-side energy
    kappa: float = 1e-28       # effective capacitance coefficient

    # rotary-wing propulsion constants
    P0: float = 59.03          # blade profile power [W]
    P1: float = 79.07          # induced (hover) power [W]
    U_tip: float = 120.0       # blade tip speed [m/s]
    v0: float = 3.6            # mean rotor induced velocity [m/s]
    rho_air: float = 1.225     # air density [kg/m^3]
    b1: float = 0.6            # fuselage drag ratio
    A_rotor: float = 0.5030    # rotor disc area [m^2]
    g_solidity: float = 0.05   # rotor solidity

    # per-UAV resource budgets (sampled per UAV from the ranges unless
    # explicit arrays are given)
    A_range: tuple[float, float] = (10 * GB, 24 * GB)     # memory [bits]
    B_range: tuple[float, float] = (400 * GB, 860 * GB)   # storage [bits]
    A_m: np.ndarray | None = None
    B_m: np.ndarray | None = None
    F_m: float | np.ndarray = 10e9  # UAV computing resource [cycles/s], scalar or per UAV

    # per-type service footprints (sampled from range/Z unless explicit)
    a_z: np.ndarray | None = None   # memory footprint [bits]
    b_z: np.ndarray | None = None   # storage footprint [bits]
    c_z: np.ndarray | None = None   # processing density [cycles/bit]

    # users
    F_k: float = 1e9           # user computing resource [cycles/s]
    p_k: float = 0.5           # user transmit power [W]
    p_local: float = 0.5       # probability a user holds a type's service locally

    # tasks
    D_min: float = 3.5e6       # task size lower bound [bits]
    D_max: float = 4.5e6
    C_min: float = 500.0       # processing density bounds [cycles/bit]
    C_max: float = 1500.0

    P_m_tx: float = 1.0        # UAV relay transmit power [W]
    seed: int = 0

    def validate(self) -> None:
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.Z < 1:
            raise ConfigError("Z must be >= 1")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.delta <= 0:
            raise ConfigError("delta must be > 0")
        if not 0 < self.H_min < self.H_max:
            raise ConfigError("altitude bounds require 0 < H_min < H_max")
        if not 0 <= self.X_min < self.X_max:
            raise ConfigError("area bounds require 0 <= X_min < X_max")
        if self.v_max <= 0:
            raise ConfigError("v_max must be > 0")
        if self.W <= 0:
            raise ConfigError("W must be > 0")
        if self.omega < 0:
            raise ConfigError("omega must be >= 0")
        for name in ("kappa", "P0", "P1", "U_tip", "v0", "rho_air", "b1",
                     "A_rotor", "g_solidity", "F_k", "p_k", "P_m_tx"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        f_m = np.atleast_1d(np.asarray(self.F_m, dtype=float))
        if np.any(f_m <= 0):
            raise ConfigError("F_m must be > 0")
        if f_m.size not in (1, self.M):
            raise ConfigError("F_m must be a scalar or have one value per UAV")
        if not 0 <= self.p_local <= 1:
            raise ConfigError("p_local must be in [0, 1]")
        if not 0 < self.D_min <= self.D_max:
            raise ConfigError("task size bounds require 0 < D_min <= D_max")
        if not 0 < self.C_min <= self.C_max:
            raise ConfigError("complexity bounds require 0 < C_min <= C_max")
        for name, rng in (("A_range", self.A_range), ("B_range", self.B_range)):
            if not 0 < rng[0] <= rng[1]:
                raise ConfigError(f"{name} must satisfy 0 < lo <= hi")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.c_z is not None:
            c = np.asarray(self.c_z, dtype=float)
            if c.shape != (self.Z,):
                raise ConfigError("c_z must have length Z")
            if np.any(c < self.C_min) or np.any(c > self.C_max):
                raise ConfigError("c_z entries must lie in [C_min, C_max]")
        for name, arr, n in (("a_z", self.a_z, self.Z), ("b_z", self.b_z, self.Z),
                             ("A_m", self.A_m, self.M), ("B_m", self.B_m, self.M)):
            if arr is not None and np.asarray(arr, dtype=float).shape != (n,):
                raise ConfigError(f"{name} has wrong length")

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


@dataclass
class UavState:
    q: np.ndarray  # 3D position [m]
    v: np.ndarray  # 3D velocity [m/s]


@dataclass
class UserState:
    u: np.ndarray              # 3D position, u[2] == 0
    local_services: np.ndarray  # bool mask, length Z


@dataclass
class WorldState:
    """Per-slot snapshot plus the realized per-scenario constants."""

    config: ScenarioConfig
    users: list[UserState]
    uavs: list[UavState]
    # realized scenario constants
    a_z: np.ndarray
    b_z: np.ndarray
    c_z: np.ndarray
    A_m: np.ndarray
    B_m: np.ndarray
    F_m: np.ndarray
    # per-slot quantities (filled by the environment)
    task_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    task_types: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    placement: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=bool))
    rates_user_uav: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    rates_uav_uav: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    t: int = 0

    def uav_positions(self) -> np.ndarray:
        return np.array([u.q for u in self.uavs])

    def user_positions(self) -> np.ndarray:
        return np.array([u.u for u in self.users])

    def local_service_mask(self) -> np.ndarray:
        return np.array([u.local_services for u in self.users])


def build_scenario(config: ScenarioConfig, rng: np.random.Generator | None = None) -> WorldState:
    """Draw users, UAV start positions, service footprints and budgets.

    Footprints are rejection-sampled until the fixed round-robin placement
    (service z on UAV z mod M, then greedy fill) satisfies all budget and
    coverage constraints, so a feasible placement always exists.
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.seed)

    side = config.X_max - config.X_min
    users = []
    for _ in range(config.K):
        xy = config.X_min + rng.uniform(0.0, side, size=2)
        mask = rng.uniform(size=config.Z) < config.p_local
        users.append(UserState(u=np.array([xy[0], xy[1], 0.0]), local_services=mask))

    uavs = []
    for _ in range(config.M):
        xy = config.X_min + rng.uniform(0.0, side, size=2)
        h = rng.uniform(config.H_min, config.H_max)
        uavs.append(UavState(q=np.array([xy[0], xy[1], h]), v=np.zeros(3)))

    c_z = (np.asarray(config.c_z, dtype=float) if config.c_z is not None
           else rng.uniform(config.C_min, config.C_max, size=config.Z))

    from .placement import fsp_placement, validate_placement

    def draw_budgets():
        A = (np.asarray(config.A_m, dtype=float) if config.A_m is not None
             else rng.uniform(*config.A_range, size=config.M))
        B = (np.asarray(config.B_m, dtype=float) if config.B_m is not None
             else rng.uniform(*config.B_range, size=config.M))
        return A, B

    if config.a_z is not None and config.b_z is not None:
        A_m, B_m = draw_budgets()
        a_z = np.asarray(config.a_z, dtype=float)
        b_z = np.asarray(config.b_z, dtype=float)
        base = fsp_placement(a_z, b_z, A_m, B_m)
        if base is None or not validate_placement(base, a_z, b_z, A_m, B_m).feasible:
            raise ScenarioInfeasibleError(
                "explicit footprints admit no feasible round-robin placement")
    else:
        # rejection-sample footprints (and budgets, when they are sampled too)
        # until the round-robin base placement is feasible
        a_z = b_z = None
        for _ in range(1000):
            A_m, B_m = draw_budgets()
            cand_a = rng.uniform(*config.A_range, size=config.Z) / config.Z
            cand_b = rng.uniform(*config.B_range, size=config.Z) / config.Z
            base = fsp_placement(cand_a, cand_b, A_m, B_m)
            if base is not None and validate_placement(base, cand_a, cand_b, A_m, B_m).feasible:
                a_z, b_z = cand_a, cand_b
                break
        if a_z is None:
            raise ScenarioInfeasibleError(
                "could not sample service footprints admitting a feasible placement")

    F_m = np.broadcast_to(np.asarray(config.F_m, dtype=float),
                          (config.M,)).copy()
    return WorldState(config=config, users=users, uavs=uavs,
                      a_z=a_z, b_z=b_z, c_z=c_z, A_m=A_m, B_m=B_m, F_m=F_m)


def step_kinematics(uav: UavState, delta: float, config: ScenarioConfig) -> UavState:
    """Advance position by v*delta; clip altitude, leave x/y unclipped."""
    q = uav.q + uav.v * delta
    q[2] = min(max(q[2], config.H_min), config.H_max)
    return UavState(q=q, v=uav.v.copy())


def velocity_from_controls(speed_raw: float, pitch_raw: float, yaw_raw: float,
                           v_max: float) -> np.ndarray:
    """Map controls in [-1, 1]^3 to a Cartesian velocity with norm <= v_max.

    speed = ((s+1)/2)^2 * v_max (square law: propulsion power is steep in
    speed, so the useful low-speed band gets most of the control range),
    pitch in [-pi/2, pi/2], yaw in [-pi, pi].
    """
    s = (0.5 * (speed_raw + 1.0)) ** 2 * v_max
    phi = pitch_raw * (np.pi / 2.0)
    psi = yaw_raw * np.pi
    return s * np.array([np.cos(phi) * np.cos(psi),
                         np.cos(phi) * np.sin(psi),
                         np.sin(phi)])


def propulsion_power(speed: float, config: ScenarioConfig) -> float:
    """Rotary-wing propulsion power [W] at horizontal speed `speed`.

    Blade profile term grows with the cube of speed, the induced term decays
    from P1 at hover, and the parasite term is 0.5*b1*rho*g*A*s^3.
    """
    if speed < 0:
        raise ValueError("speed must be >= 0")
    s = float(speed)
    parasite = 0.5 * config.b1 * config.rho_air * config.g_solidity * config.A_rotor * s ** 3
    blade = config.P0 * (1.0 + 3.0 * s ** 3 / config.U_tip ** 2)
    inner = np.sqrt(1.0 + s ** 4 / (4.0 * config.v0 ** 4)) - s ** 2 / (2.0 * config.v0 ** 2)
    induced = config.P1 * np.sqrt(max(inner, 0.0))
    return parasite + blade + induced


def fleet_propulsion_energy(speeds: np.ndarray, config: ScenarioConfig) -> float:
    """Total propulsion energy [J] of the fleet over one slot."""
    return float(sum(propulsion_power(s, config) for s in speeds) * config.delta)


def min_propulsion_power(config: ScenarioConfig, grid: int = 2001) -> float:
    """Minimum of propulsion_power over speeds in [0, v_max] (fine grid + polish)."""
    from scipy.optimize import minimize_scalar

    speeds = np.linspace(0.0, config.v_max, grid)
    powers = np.array([propulsion_power(s, config) for s in speeds])
    i = int(np.argmin(powers))
    lo = speeds[max(i - 1, 0)]
    hi = speeds[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda s: propulsion_power(s, config), bounds=(lo, hi),
                          method="bounded")
    return float(min(res.fun, powers[i]))


def safety_violations(positions: np.ndarray, d_dim: float) -> list[tuple[int, int]]:
    """All unordered index pairs closer than d_dim."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pos[i] - pos[j]) < d_dim:
                pairs.append((i, j))
    return pairs


def out_of_bounds_excess(q: np.ndarray, x_min: float, x_max: float) -> float:
    """Horizontal distance from q to the service area (0 inside)."""
    xy = np.asarray(q, dtype=float)[:2]
    clipped = np.clip(xy, x_min, x_max)
    return float(np.linalg.norm(xy - clipped))
