"""Small-cell deployments, pathloss and cross-link SINR.

Gains follow the 3GPP pico NLOS form ``140.7 + 36.7 log10(d_km)`` plus a
fixed penetration loss, without fading. Every transmitter uses its maximum
power (no power control).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .frame import ContractError, Link

MIN_DISTANCE_M = 1.0
PATHLOSS_INTERCEPT_DB = 140.7
PATHLOSS_SLOPE_DB = 36.7


class ConfigError(ValueError):
    """Invalid scenario or topology parameters."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerConfig:
    scbs_tx_power: float = 23.0  # dBm
    ue_tx_power: float = 23.0  # dBm
    noise_density: float = -174.0  # dBm/Hz
    penetration_loss: float = 10.0  # dB
    bandwidth_total: float = 10e6  # Hz

    def __post_init__(self):
        values = (self.scbs_tx_power, self.ue_tx_power, self.noise_density, self.penetration_loss)
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("powers and losses must be finite")
        if not self.bandwidth_total > 0:
            raise ConfigError("bandwidth_total must be positive")

    @property
    def p_scbs(self) -> float:
        return float(dbm_to_watts(self.scbs_tx_power))

    @property
    def p_ue(self) -> float:
        return float(dbm_to_watts(self.ue_tx_power))

    def noise_power(self, bandwidth: float | None = None) -> float:
        """Thermal noise in watts over ``bandwidth`` (default: whole band)."""
        bw = self.bandwidth_total if bandwidth is None else bandwidth
        return float(dbm_to_watts(self.noise_density)) * bw


def pathloss_db(distance_m):
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    return PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * np.log10(d / 1000.0)


def channel_gain(tx, rx, cfg: PowerConfig) -> float:
    """Linear gain between two points, pathloss and penetration loss included."""
    d = math.dist(tuple(tx), tuple(rx))
    return float(10.0 ** (-(pathloss_db(d) + cfg.penetration_loss) / 10.0))


def _gain_from_distance(d: np.ndarray, cfg: PowerConfig) -> np.ndarray:
    return 10.0 ** (-(pathloss_db(d) + cfg.penetration_loss) / 10.0)


@dataclass(frozen=True)
class NetworkTopology:
    """SCBS positions and the UEs subscribed to each one (closed access).

    ``ue_positions`` has shape ``(num_scbs, ues_per_cell, 2)``.
    """

    scbs_positions: np.ndarray
    ue_positions: np.ndarray
    cell_radius: float
    area_side: float
    rng_seed: int | None = None
    max_ues_per_cell: int = 20

    def __post_init__(self):
        bs = np.asarray(self.scbs_positions, dtype=float).reshape(-1, 2)
        ue = np.asarray(self.ue_positions, dtype=float)
        if ue.ndim != 3 or ue.shape[0] != bs.shape[0] or ue.shape[2] != 2:
            raise ConfigError("ue_positions must have shape (num_scbs, ues_per_cell, 2)")
        if ue.shape[1] > self.max_ues_per_cell:
            raise ConfigError(f"at most {self.max_ues_per_cell} UEs per SCBS")
        dist = np.linalg.norm(ue - bs[:, None, :], axis=-1)
        if np.any(dist > self.cell_radius * (1 + 1e-12)):
            raise ConfigError("a UE lies outside its serving SCBS coverage radius")
        bs.setflags(write=False)
        ue.setflags(write=False)
        object.__setattr__(self, "scbs_positions", bs)
        object.__setattr__(self, "ue_positions", ue)

    @property
    def num_scbs(self) -> int:
        return self.scbs_positions.shape[0]

    @property
    def ues_per_cell(self) -> int:
        return self.ue_positions.shape[1]

    def ue(self, cell: int, ue: int) -> np.ndarray:
        return self.ue_positions[cell, ue]

    def channels(self, cfg: PowerConfig) -> "ChannelMap":
        return ChannelMap(self, cfg)

    def save(self, path) -> None:
        """Write a plain-text replay file (header comments, one row per node)."""
        lines = [
            "# dyntdd topology v1",
            f"# seed={self.rng_seed}",
            f"# cell_radius={self.cell_radius!r}",
            f"# area_side={self.area_side!r}",
            "kind,cell,ue,x,y",
        ]
        for b in range(self.num_scbs):
            x, y = map(float, self.scbs_positions[b])
            lines.append(f"scbs,{b},,{x!r},{y!r}")
            for u in range(self.ues_per_cell):
                x, y = map(float, self.ue_positions[b, u])
                lines.append(f"ue,{b},{u},{x!r},{y!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "NetworkTopology":
        meta: dict[str, str] = {}
        bs: dict[int, tuple[float, float]] = {}
        ues: dict[int, dict[int, tuple[float, float]]] = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, val = line[1:].strip().split("=", 1)
                    meta[key.strip()] = val.strip()
                continue
            if line.startswith("kind,"):
                continue
            kind, cell, ue, x, y = line.split(",")
            if kind == "scbs":
                bs[int(cell)] = (float(x), float(y))
            elif kind == "ue":
                ues.setdefault(int(cell), {})[int(ue)] = (float(x), float(y))
            else:
                raise ConfigError(f"unknown node kind {kind!r}")
        n = len(bs)
        if sorted(bs) != list(range(n)) or sorted(ues) != list(range(n)):
            raise ConfigError("topology file must list every SCBS with its UEs")
        counts = {len(ues[b]) for b in range(n)}
        if len(counts) != 1:
            raise ConfigError("every SCBS must have the same number of UEs")
        seed = meta.get("seed", "None")
        return cls(
            scbs_positions=np.array([bs[b] for b in range(n)]),
            ue_positions=np.array([[ues[b][u] for u in sorted(ues[b])] for b in range(n)]),
            cell_radius=float(meta["cell_radius"]),
            area_side=float(meta["area_side"]),
            rng_seed=None if seed == "None" else int(seed),
        )


def generate_topology(
    num_scbs: int,
    area_side: float,
    cell_radius: float,
    ues_per_cell: int,
    seed: int,
    max_ues_per_cell: int = 20,
    min_separation: float = 0.0,
    max_attempts: int = 10_000,
) -> NetworkTopology:
    """Drop SCBSs uniformly on a square and UEs uniformly in each cell disk.

    With ``min_separation > 0`` SCBS drops closer than that to an earlier
    one are redrawn (a hard-core process); ``2 * cell_radius`` keeps the
    coverage disks disjoint.
    """
    if num_scbs < 1 or ues_per_cell < 1:
        raise ConfigError("num_scbs and ues_per_cell must be >= 1")
    if not area_side > 0 or not cell_radius > 0:
        raise ConfigError("area_side and cell_radius must be positive")
    if ues_per_cell > max_ues_per_cell:
        raise ConfigError(f"ues_per_cell={ues_per_cell} exceeds the maximum {max_ues_per_cell}")
    if min_separation < 0:
        raise ConfigError("min_separation must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    bs = np.empty((num_scbs, 2))
    placed = 0
    for _ in range(max_attempts):
        cand = rng.uniform(0.0, area_side, size=2)
        if placed and np.min(np.linalg.norm(bs[:placed] - cand, axis=1)) < min_separation:
            continue
        bs[placed] = cand
        placed += 1
        if placed == num_scbs:
            break
    else:
        raise ConfigError(
            f"could not place {num_scbs} SCBSs {min_separation} m apart in a {area_side} m square"
        )
    # sqrt of a uniform radius fraction gives a uniform density over the disk
    r = cell_radius * np.sqrt(rng.uniform(0.0, 1.0, size=(num_scbs, ues_per_cell)))
    theta = rng.uniform(0.0, 2 * np.pi, size=(num_scbs, ues_per_cell))
    ue = bs[:, None, :] + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    return NetworkTopology(bs, ue, float(cell_radius), float(area_side), int(seed), max_ues_per_cell)


def _check_direction(serving: int, dirs: Sequence, link: Link) -> None:
    if Link.parse(dirs[serving]) is not link:
        raise ContractError(f"cell {serving} is not operating in {link.value}")


def _ul_source_gain(topo, cell, choice, rx, cfg) -> float:
    """Gain from cell ``cell``'s interfering UE to ``rx``; ``None`` averages over its UEs."""
    if choice is None:
        return float(np.mean([channel_gain(p, rx, cfg) for p in topo.ue_positions[cell]]))
    return channel_gain(topo.ue_positions[cell, choice], rx, cfg)


def _interference(
    rx,
    serving: int,
    dirs: Sequence,
    topo: NetworkTopology,
    cfg: PowerConfig,
    interferer_choice: Mapping[int, int | None] | Sequence[int | None] | None,
    silent,
) -> float:
    silent = set(silent or ())
    total = 0.0
    for j in range(topo.num_scbs):
        if j == serving or j in silent:
            continue
        if Link.parse(dirs[j]) is Link.UL:
            choice = None if interferer_choice is None else interferer_choice[j]
            total += cfg.p_ue * _ul_source_gain(topo, j, choice, rx, cfg)
        else:
            total += cfg.p_scbs * channel_gain(topo.scbs_positions[j], rx, cfg)
    return total


def sinr_ul(
    serving: int,
    ue: int,
    dirs: Sequence,
    topo: NetworkTopology,
    cfg: PowerConfig,
    interferer_choice=None,
    bandwidth: float | None = None,
    silent=(),
) -> float:
    """Uplink SINR at SCBS ``serving`` for its UE ``ue``.

    ``dirs`` lists every cell's direction in the current subframe. UL cells
    interfere through the UE named in ``interferer_choice`` (``None`` entries,
    or no mapping at all, use the mean over the cell's UEs); DL cells
    interfere from their SCBS position. Cells in ``silent`` have nothing to
    send and contribute nothing. Noise is taken over ``bandwidth``.
    """
    _check_direction(serving, dirs, Link.UL)
    rx = topo.scbs_positions[serving]
    signal = cfg.p_ue * channel_gain(topo.ue_positions[serving, ue], rx, cfg)
    interference = _interference(rx, serving, dirs, topo, cfg, interferer_choice, silent)
    return signal / (cfg.noise_power(bandwidth) + interference)


def sinr_dl(
    serving: int,
    ue: int,
    dirs: Sequence,
    topo: NetworkTopology,
    cfg: PowerConfig,
    interferer_choice=None,
    bandwidth: float | None = None,
    silent=(),
) -> float:
    """Downlink SINR at UE ``ue`` of cell ``serving``; mirror of :func:`sinr_ul`."""
    _check_direction(serving, dirs, Link.DL)
    rx = topo.ue_positions[serving, ue]
    signal = cfg.p_scbs * channel_gain(topo.scbs_positions[serving], rx, cfg)
    interference = _interference(rx, serving, dirs, topo, cfg, interferer_choice, silent)
    return signal / (cfg.noise_power(bandwidth) + interference)


def rate(bandwidth_share: float, sinr):
    """Shannon rate in bits/s."""
    if bandwidth_share <= 0:
        raise ContractError("bandwidth_share must be positive")
    if np.any(np.asarray(sinr) < 0):
        raise ContractError("sinr must be non-negative")
    return bandwidth_share * np.log2(1.0 + sinr)


@dataclass(frozen=True)
class ChannelMap:
    """Precomputed gain arrays for vectorized per-subframe SINR evaluation.

    Index conventions (``B`` cells, ``U`` UEs per cell):

    * ``ue_bs[b, u, k]``: UE ``u`` of cell ``b`` <-> SCBS ``k`` (reciprocal)
    * ``bs_bs[m, k]``: SCBS ``m`` -> SCBS ``k``, zero diagonal
    * ``ue_ue[b, u, c, v]``: UE ``v`` of cell ``c`` -> UE ``u`` of cell ``b``
    """

    topo: NetworkTopology
    cfg: PowerConfig

    @cached_property
    def ue_bs(self) -> np.ndarray:
        ue = self.topo.ue_positions
        bs = self.topo.scbs_positions
        d = np.linalg.norm(ue[:, :, None, :] - bs[None, None, :, :], axis=-1)
        return _gain_from_distance(d, self.cfg)

    @cached_property
    def bs_bs(self) -> np.ndarray:
        bs = self.topo.scbs_positions
        d = np.linalg.norm(bs[:, None, :] - bs[None, :, :], axis=-1)
        g = _gain_from_distance(d, self.cfg)
        np.fill_diagonal(g, 0.0)
        return g

    @cached_property
    def ue_ue(self) -> np.ndarray:
        ue = self.topo.ue_positions
        d = np.linalg.norm(ue[:, :, None, None, :] - ue[None, None, :, :, :], axis=-1)
        return _gain_from_distance(d, self.cfg)

    @cached_property
    def serving(self) -> np.ndarray:
        """``serving[b, u]``: gain between UE ``u`` and its own SCBS."""
        b = np.arange(self.topo.num_scbs)
        return self.ue_bs[b, :, b]

    @cached_property
    def ue_bs_mean(self) -> np.ndarray:
        """``[c, k]``: mean over cell ``c``'s UEs of the gain to SCBS ``k``."""
        return self.ue_bs.mean(axis=1)

    @cached_property
    def ue_ue_mean(self) -> np.ndarray:
        """``[b, u, c]``: mean over cell ``c``'s UEs of the gain to UE ``(b, u)``."""
        return self.ue_ue.mean(axis=3)

    @cached_property
    def _bs_to_ue_others(self) -> np.ndarray:
        """``ue_bs`` with each UE's own-SCBS term removed, shape ``(B, U, B)``."""
        g = self.ue_bs.copy()
        own = np.arange(self.topo.num_scbs)
        g[own, :, own] = 0.0
        return g

    @cached_property
    def _ue_bs_mean_others(self) -> np.ndarray:
        g = self.ue_bs_mean.copy()
        np.fill_diagonal(g, 0.0)
        return g

    @cached_property
    def _powers(self) -> tuple[float, float]:
        return self.cfg.p_ue, self.cfg.p_scbs

    def interference(self, ul: np.ndarray, tx: np.ndarray, reps: np.ndarray | None):
        """Interference powers for one subframe.

        Args:
            ul: bool per cell, True when the cell is uplink.
            tx: bool per cell, True when the cell transmits at all.
            reps: per-cell index of the UE transmitting in UL cells, or None
                to use the mean over each cell's UEs.

        Returns:
            ``(at_scbs, at_ue)``: interference at each SCBS receiver, shape
            ``(B,)``, and at each UE receiver, shape ``(B, U)``. Own-cell
            terms are excluded.
        """
        p_ue, p_bs = self._powers
        ul_tx = (ul & tx).astype(float)
        dl_tx = (~ul & tx).astype(float)
        if reps is None:
            from_ue_at_bs = ul_tx @ self._ue_bs_mean_others
            from_ue_at_ue = self.ue_ue_mean @ ul_tx
        else:
            cells = np.arange(self.topo.num_scbs)
            g = self.ue_bs[cells, reps, :]
            g[cells, cells] = 0.0
            from_ue_at_bs = ul_tx @ g
            from_ue_at_ue = self.ue_ue[:, :, cells, reps] @ ul_tx
        at_scbs = p_ue * from_ue_at_bs + p_bs * (dl_tx @ self.bs_bs)
        # bs -> ue gains equal ue_bs by reciprocity
        at_ue = p_ue * from_ue_at_ue + p_bs * (self._bs_to_ue_others @ dl_tx)
        return at_scbs, at_ue
