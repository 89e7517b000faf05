"""TDD frame structure, duty cycles and load densities.

A frame holds ``num_subframes`` subframes. A switching point ``w`` in
``1 .. num_subframes - 1`` makes subframes ``1 .. w`` uplink and the rest
downlink, so every frame carries at least one subframe of each kind.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Keeps rho / (1 - rho) finite (= 99) for overloaded cells.
RHO_MAX = 0.99


class ContractError(ValueError):
    """An operation was called outside its documented domain."""


class Link(str, enum.Enum):
    UL = "UL"
    DL = "DL"

    @classmethod
    def parse(cls, value) -> "Link":
        if isinstance(value, Link):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ContractError(f"unknown link direction {value!r}") from None


def duty_cycle(w: int, num_slots: int, link: Link | str) -> float:
    """Fraction of the frame given to ``link`` for switching point ``w``.

    ``w / num_slots`` for UL, ``(num_slots - w) / num_slots`` for DL.
    """
    link = Link.parse(link)
    if num_slots < 1 or not 1 <= w <= num_slots:
        raise ContractError(f"switching point {w} outside 1..{num_slots}")
    if link is Link.UL:
        return w / num_slots
    return (num_slots - w) / num_slots


def subframe_direction(w: int, j: int, num_subframes: int = 6) -> Link:
    """Direction of 1-based subframe ``j`` under switching point ``w``."""
    if not 1 <= j <= num_subframes:
        raise ContractError(f"subframe {j} outside 1..{num_subframes}")
    if not 1 <= w < num_subframes:
        raise ContractError(f"switching point {w} outside 1..{num_subframes - 1}")
    return Link.UL if j <= w else Link.DL


def system_load_density(gamma: float, rate: float) -> float:
    """Offered bits/s over achievable bits/s at one location.

    A zero rate returns ``inf``; callers clamp it to ``RHO_MAX``.
    """
    if rate < 0 or gamma < 0:
        raise ContractError("gamma and rate must be non-negative")
    if gamma == 0:
        return 0.0
    if rate == 0:
        return float("inf")
    return gamma / rate


@dataclass(frozen=True)
class FrameSchedule:
    """Per-SCBS switching points for one frame."""

    switching_points: tuple[int, ...]
    num_subframes: int = 6
    subframe_duration: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "switching_points", tuple(int(w) for w in self.switching_points))
        if self.num_subframes < 2:
            raise ContractError("a frame needs at least 2 subframes")
        if self.subframe_duration <= 0:
            raise ContractError("subframe_duration must be positive")
        for b, w in enumerate(self.switching_points):
            if not 1 <= w <= self.num_switching_points:
                raise ContractError(
                    f"switching point of cell {b} is {w}, must lie in 1..{self.num_switching_points}"
                )

    @property
    def num_switching_points(self) -> int:
        return self.num_subframes - 1

    @property
    def num_cells(self) -> int:
        return len(self.switching_points)

    def direction(self, cell: int, j: int) -> Link:
        return subframe_direction(self.switching_points[cell], j, self.num_subframes)

    def duty(self, cell: int, link: Link | str) -> float:
        return duty_cycle(self.switching_points[cell], self.num_subframes, link)

    def directions(self) -> "LinkDirectionMap":
        return LinkDirectionMap.from_schedule(self)


@dataclass(frozen=True)
class LinkDirectionMap:
    """``ul[b, j-1]`` is True when cell ``b`` is uplink in subframe ``j``."""

    ul: np.ndarray

    @classmethod
    def from_schedule(cls, schedule: FrameSchedule) -> "LinkDirectionMap":
        j = np.arange(1, schedule.num_subframes + 1)
        w = np.asarray(schedule.switching_points)[:, None]
        ul = j[None, :] <= w
        ul.setflags(write=False)
        return cls(ul)

    def subframe(self, j: int) -> tuple[Link, ...]:
        """Directions of all cells in 1-based subframe ``j``."""
        if not 1 <= j <= self.ul.shape[1]:
            raise ContractError(f"subframe {j} outside 1..{self.ul.shape[1]}")
        return tuple(Link.UL if u else Link.DL for u in self.ul[:, j - 1])

    def cells(self, j: int, link: Link | str) -> list[int]:
        link = Link.parse(link)
        col = self.ul[:, j - 1]
        mask = col if link is Link.UL else ~col
        return [int(b) for b in np.flatnonzero(mask)]


def cell_load(
    cell: int,
    subframe: int,
    link: Link | str,
    schedule: FrameSchedule,
    densities: Sequence[float],
    clamp: bool = True,
) -> float:
    """Cell load in one subframe: summed per-UE densities over the duty cycle.

    With ``clamp`` the result is limited to ``[0, RHO_MAX]``.
    """
    link = Link.parse(link)
    if schedule.direction(cell, subframe) is not link:
        raise ContractError(f"cell {cell} is not {link.value} in subframe {subframe}")
    total = float(np.sum(densities)) if len(densities) else 0.0
    rho = total / schedule.duty(cell, link)
    if clamp:
        return min(max(rho, 0.0), RHO_MAX)
    return rho


@dataclass(frozen=True)
class CellLoadSnapshot:
    """Per-cell, per-subframe loads of one frame.

    ``raw[b, j-1]`` is the unclamped load of cell ``b`` in subframe ``j``
    for whichever direction the cell uses there; ``rho`` is its clamped
    counterpart.
    """

    schedule: FrameSchedule
    raw: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        expected = (self.schedule.num_cells, self.schedule.num_subframes)
        if raw.shape != expected:
            raise ContractError(f"load array shape {raw.shape} != {expected}")
        if np.any(raw < 0) or np.any(np.isnan(raw)):
            raise ContractError("loads must be non-negative")
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)

    @property
    def rho(self) -> np.ndarray:
        return np.clip(self.raw, 0.0, RHO_MAX)

    def direction(self, cell: int, j: int) -> Link:
        return self.schedule.direction(cell, j)
