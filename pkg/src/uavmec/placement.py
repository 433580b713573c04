"""Service placement: validation, repair of proposed placements, enumeration.

A placement is an M x Z boolean matrix; entry (m, z) means service z runs on
UAV m during the slot.  Feasibility requires per-UAV memory and storage
budgets and at least one host per service type.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class PlacementReport:
    feasible: bool
    memory_violations: list[int]    # UAV indices over memory budget
    storage_violations: list[int]   # UAV indices over storage budget
    coverage_violations: list[int]  # service types with no host


def validate_placement(p: np.ndarray, a_z: np.ndarray, b_z: np.ndarray,
                       A_m: np.ndarray, B_m: np.ndarray) -> PlacementReport:
    p = np.asarray(p, dtype=bool)
    mem = p @ np.asarray(a_z, dtype=float)
    sto = p @ np.asarray(b_z, dtype=float)
    mem_bad = [int(m) for m in np.nonzero(mem > np.asarray(A_m, dtype=float))[0]]
    sto_bad = [int(m) for m in np.nonzero(sto > np.asarray(B_m, dtype=float))[0]]
    cov_bad = [int(z) for z in np.nonzero(p.sum(axis=0) < 1)[0]]
    return PlacementReport(feasible=not (mem_bad or sto_bad or cov_bad),
                           memory_violations=mem_bad,
                           storage_violations=sto_bad,
                           coverage_violations=cov_bad)


def _fits(p: np.ndarray, m: int, z: int, a_z, b_z, A_m, B_m) -> bool:
    mem = p[m] @ a_z + a_z[z]
    sto = p[m] @ b_z + b_z[z]
    return mem <= A_m[m] and sto <= B_m[m]


def fsp_placement(a_z: np.ndarray, b_z: np.ndarray, A_m: np.ndarray,
                  B_m: np.ndarray) -> np.ndarray | None:
    """Fixed placement baseline: service z on UAV z mod M, then greedy fill.

    Returns None when even the round-robin assignment breaks a budget.
    """
    a_z = np.asarray(a_z, dtype=float)
    b_z = np.asarray(b_z, dtype=float)
    A_m = np.asarray(A_m, dtype=float)
    B_m = np.asarray(B_m, dtype=float)
    M, Z = len(A_m), len(a_z)
    p = np.zeros((M, Z), dtype=bool)
    for z in range(Z):
        m = z % M
        if not _fits(p, m, z, a_z, b_z, A_m, B_m):
            return None
        p[m, z] = True
    for m in range(M):
        for z in range(Z):
            if not p[m, z] and _fits(p, m, z, a_z, b_z, A_m, B_m):
                p[m, z] = True
    return p


def repair_placement(logits: np.ndarray, a_z: np.ndarray, b_z: np.ndarray,
                     A_m: np.ndarray, B_m: np.ndarray) -> np.ndarray:
    """Project continuous placement logits onto the feasible set.

    Threshold logits > 0, drop lowest-logit services on over-budget UAVs,
    then host every uncovered type on the highest-logit UAV with room
    (evicting that UAV's lowest-logit redundant service when necessary).
    Falls back to the round-robin base placement merged with the surviving
    candidates, so the result is always feasible when the scenario is.
    Deterministic: ties resolve toward the lowest (m, z) index.
    """
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise ValueError("placement logits must be finite")
    a_z = np.asarray(a_z, dtype=float)
    b_z = np.asarray(b_z, dtype=float)
    A_m = np.asarray(A_m, dtype=float)
    B_m = np.asarray(B_m, dtype=float)
    M, Z = logits.shape

    p = logits > 0.0
    # trim over-budget UAVs, cheapest-preference first
    for m in range(M):
        while p[m] @ a_z > A_m[m] or p[m] @ b_z > B_m[m]:
            placed = np.nonzero(p[m])[0]
            drop = placed[int(np.argmin(logits[m, placed]))]
            p[m, drop] = False

    # cover every service type
    for z in range(Z):
        if p[:, z].any():
            continue
        order = np.argsort(-logits[:, z], kind="stable")
        placed_z = False
        for m in order:
            if _fits(p, m, z, a_z, b_z, A_m, B_m):
                p[m, z] = True
                placed_z = True
                break
        if placed_z:
            continue
        # second pass: allow evicting redundant (multi-hosted) services
        for m in order:
            while True:
                hosted = np.nonzero(p[m])[0]
                redundant = [zz for zz in hosted if p[:, zz].sum() > 1]
                if _fits(p, m, z, a_z, b_z, A_m, B_m):
                    p[m, z] = True
                    placed_z = True
                    break
                if not redundant:
                    break
                drop = min(redundant, key=lambda zz: (logits[m, zz], zz))
                p[m, drop] = False
            if placed_z:
                break
        if not placed_z:
            # safety net: complete search for a one-host-per-type assignment
            # (such an assignment exists iff any feasible placement does)
            assign = _coverage_assignment(logits, a_z, b_z, A_m, B_m)
            if assign is None:
                raise ConfigError("scenario admits no feasible placement")
            p = np.zeros((M, Z), dtype=bool)
            for zz, m in enumerate(assign):
                p[m, zz] = True
            order_all = sorted(((m, zz) for m in range(M) for zz in range(Z)),
                               key=lambda mz: (-logits[mz], mz))
            for m, zz in order_all:
                if not p[m, zz] and logits[m, zz] > 0 and _fits(p, m, zz, a_z, b_z, A_m, B_m):
                    p[m, zz] = True
            return p
    return p


def _coverage_assignment(logits, a_z, b_z, A_m, B_m) -> list[int] | None:
    """Backtracking host assignment z -> m within budgets; None if impossible.

    Hosts are tried in descending-logit order so ties stay deterministic.
    """
    M, Z = logits.shape
    mem = A_m.astype(float).copy()
    sto = B_m.astype(float).copy()
    assign = [0] * Z

    def dfs(z: int) -> bool:
        if z == Z:
            return True
        for m in np.argsort(-logits[:, z], kind="stable"):
            if a_z[z] <= mem[m] and b_z[z] <= sto[m]:
                mem[m] -= a_z[z]
                sto[m] -= b_z[z]
                assign[z] = int(m)
                if dfs(z + 1):
                    return True
                mem[m] += a_z[z]
                sto[m] += b_z[z]
        return False

    return assign if dfs(0) else None


def enumerate_feasible_placements(a_z: np.ndarray, b_z: np.ndarray,
                                  A_m: np.ndarray, B_m: np.ndarray):
    """Yield every feasible M x Z placement matrix (brute force, M*Z <= 20)."""
    a_z = np.asarray(a_z, dtype=float)
    b_z = np.asarray(b_z, dtype=float)
    A_m = np.asarray(A_m, dtype=float)
    B_m = np.asarray(B_m, dtype=float)
    M, Z = len(A_m), len(a_z)
    if M * Z > 20:
        raise ValueError(f"enumeration refused for M*Z = {M * Z} > 20")
    for bits in range(1 << (M * Z)):
        p = np.array([(bits >> i) & 1 for i in range(M * Z)],
                     dtype=bool).reshape(M, Z)
        if validate_placement(p, a_z, b_z, A_m, B_m).feasible:
            yield p
