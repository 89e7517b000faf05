"""Delay costs and the exact switching-point game on small instances.

The per-cell cost averages the M/G/1-PS delay proxy ``rho / (1 - rho)``
over the UL subframes and over the DL subframes of a frame, then adds the
two. :func:`build_cost_tensor` evaluates that cost for every joint action
profile under mean traffic; it works through the scalar SINR functions
and is the reference the simulator is checked against.
"""
from __future__ import annotations

import itertools
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .frame import RHO_MAX, CellLoadSnapshot, ContractError, FrameSchedule, Link
from .topology import NetworkTopology, PowerConfig, rate, sinr_dl, sinr_ul
from .traffic import TrafficProfile

MAX_ORACLE_PLAYERS = 4
MAX_ORACLE_ACTIONS = 6


def _check_profile(profile: Sequence[int], loads: CellLoadSnapshot) -> None:
    if tuple(profile) != loads.schedule.switching_points:
        raise ContractError("loads were not computed under this action profile")


def delay_term(rho):
    return rho / (1.0 - rho)


def per_cell_cost(cell: int, profile: Sequence[int], loads: CellLoadSnapshot) -> float:
    _check_profile(profile, loads)
    w = profile[cell]
    n = loads.schedule.num_subframes
    d = delay_term(loads.rho[cell])
    return float(d[:w].sum() / w + d[w:].sum() / (n - w))


def global_cost(profile: Sequence[int], loads: CellLoadSnapshot) -> float:
    return sum(per_cell_cost(b, profile, loads) for b in range(len(profile)))


def feasibility(profile: Sequence[int], loads: CellLoadSnapshot, strict: bool = True) -> bool:
    """Whether every unclamped load lies in ``(0, 1)``.

    With ``strict=False`` idle subframes (load exactly 0) are accepted and
    only the upper bound is enforced.
    """
    _check_profile(profile, loads)
    raw = loads.raw
    if np.any(raw >= 1.0):
        return False
    return bool(np.all(raw > 0.0)) if strict else True


def feasibility_report(profile: Sequence[int], loads: CellLoadSnapshot) -> dict[str, bool]:
    return {
        "feasible": feasibility(profile, loads, strict=True),
        "idle_feasible": feasibility(profile, loads, strict=False),
    }


def _check_simplex(p: np.ndarray, tol: float) -> None:
    if p.ndim != 1 or np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ContractError("strategy is not a probability vector")


def expected_cost(strategies: Sequence[np.ndarray], cost_tensor: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Expected cost of every player under independent mixed strategies.

    ``cost_tensor`` has shape ``(N_1, ..., N_B, B)``; entry ``[a..., b]`` is
    player ``b``'s cost at joint profile ``a``.
    """
    tensor = np.asarray(cost_tensor, dtype=float)
    num_players = len(strategies)
    if tensor.ndim != num_players + 1 or tensor.shape[-1] != num_players:
        raise ContractError("cost tensor does not match the number of players")
    out = tensor
    for b, pi in enumerate(strategies):
        pi = np.asarray(pi, dtype=float)
        _check_simplex(pi, tol)
        if pi.shape[0] != tensor.shape[b]:
            raise ContractError(f"player {b} has {tensor.shape[b]} actions, strategy has {pi.shape[0]}")
        # contracting the leading axis each time walks through players in order
        out = np.tensordot(pi, out, axes=(0, 0))
    return out


def deviation_gains(strategies: Sequence[np.ndarray], cost_tensor: np.ndarray) -> np.ndarray:
    """Largest cost reduction each player gets from a unilateral pure deviation."""
    base = expected_cost(strategies, cost_tensor)
    gains = np.empty(len(strategies))
    for b, pi in enumerate(strategies):
        best = math.inf
        for a in range(len(pi)):
            onehot = np.zeros(len(pi))
            onehot[a] = 1.0
            alt = list(strategies)
            alt[b] = onehot
            best = min(best, expected_cost(alt, cost_tensor)[b])
        gains[b] = base[b] - best
    return gains


def epsilon_bound(beta: float, num_actions: int) -> float:
    """``ln(N) / beta``: how much a logit-equilibrium player can gain by deviating."""
    if not beta > 0:
        raise ContractError("beta must be positive")
    if num_actions < 1:
        raise ContractError("num_actions must be >= 1")
    return math.log(num_actions) / beta


def game_epsilon(betas: Sequence[float], num_actions: Sequence[int]) -> float:
    return max(epsilon_bound(b, n) for b, n in zip(betas, num_actions))


def mean_traffic_loads(
    topo: NetworkTopology,
    cfg: PowerConfig,
    profiles: Sequence[TrafficProfile],
    schedule: FrameSchedule,
) -> CellLoadSnapshot:
    """Unclamped loads of one frame under mean traffic.

    Every cell transmits in every subframe; an UL cell interferes with the
    average of its UEs' gains. Each subscribed UE carries ``1/U`` of the
    cell's offered load, and its load density uses the rate it would get
    over the whole band.
    """
    n_cells = topo.num_scbs
    n_sub = schedule.num_subframes
    dirs_map = schedule.directions()
    raw = np.zeros((n_cells, n_sub))
    bw = cfg.bandwidth_total
    for j in range(1, n_sub + 1):
        dirs = dirs_map.subframe(j)
        for b in range(n_cells):
            link = dirs[b]
            gamma_ue = profiles[b].offered(link) / topo.ues_per_cell
            sinr_fn = sinr_ul if link is Link.UL else sinr_dl
            total = 0.0
            for u in range(topo.ues_per_cell):
                c = rate(bw, sinr_fn(b, u, dirs, topo, cfg, None, bw))
                total += gamma_ue / c if gamma_ue > 0 else 0.0
            raw[b, j - 1] = total / schedule.duty(b, link)
    return CellLoadSnapshot(schedule, raw)


def build_cost_tensor(
    topo: NetworkTopology,
    cfg: PowerConfig,
    profiles: Sequence[TrafficProfile],
    num_subframes: int = 6,
) -> np.ndarray:
    """Exact per-player cost at every joint switching-point profile.

    Returns an array of shape ``(W,) * B + (B,)`` with ``W = num_subframes - 1``;
    index ``a`` on a player's axis is switching point ``a + 1``.
    """
    n_cells = topo.num_scbs
    n_actions = num_subframes - 1
    if n_cells > MAX_ORACLE_PLAYERS or n_actions > MAX_ORACLE_ACTIONS:
        raise ContractError(
            f"oracle limited to {MAX_ORACLE_PLAYERS} players and {MAX_ORACLE_ACTIONS} actions"
        )
    if len(profiles) != n_cells:
        raise ContractError("one traffic profile per cell is required")
    tensor = np.zeros((n_actions,) * n_cells + (n_cells,))
    for idx in itertools.product(range(n_actions), repeat=n_cells):
        schedule = FrameSchedule(tuple(a + 1 for a in idx), num_subframes)
        loads = mean_traffic_loads(topo, cfg, profiles, schedule)
        for b in range(n_cells):
            tensor[idx + (b,)] = per_cell_cost(b, schedule.switching_points, loads)
    return tensor


def write_cost_tensor(tensor: np.ndarray, path) -> None:
    """CSV with one row per joint profile: switching points then costs."""
    n_cells = tensor.shape[-1]
    header = [f"w{b}" for b in range(n_cells)] + [f"cost{b}" for b in range(n_cells)]
    lines = [",".join(header)]
    for idx in itertools.product(*(range(k) for k in tensor.shape[:-1])):
        row = [str(a + 1) for a in idx] + [repr(float(c)) for c in tensor[idx]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_cost_tensor(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    n_cells = len(lines[0].split(",")) // 2
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    n_actions = max(int(r[b]) for r in rows for b in range(n_cells))
    tensor = np.zeros((n_actions,) * n_cells + (n_cells,))
    for r in rows:
        idx = tuple(int(v) - 1 for v in r[:n_cells])
        tensor[idx] = [float(v) for v in r[n_cells:]]
    return tensor


__all__ = [
    "RHO_MAX",
    "build_cost_tensor",
    "delay_term",
    "deviation_gains",
    "epsilon_bound",
    "expected_cost",
    "feasibility",
    "feasibility_report",
    "game_epsilon",
    "global_cost",
    "mean_traffic_loads",
    "per_cell_cost",
    "read_cost_tensor",
    "write_cost_tensor",
]
