"""Poisson flow arrivals with exponential file sizes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .frame import ContractError, Link

DEFAULT_MEAN_SIZE_BITS = 0.5e6


@dataclass(frozen=True)
class TrafficProfile:
    """Per-cell arrival rates (flows/s) and mean file sizes (bits)."""

    lambda_ul: float
    lambda_dl: float
    mean_size_ul: float = DEFAULT_MEAN_SIZE_BITS
    mean_size_dl: float = DEFAULT_MEAN_SIZE_BITS

    def __post_init__(self):
        for name in ("lambda_ul", "lambda_dl", "mean_size_ul", "mean_size_dl"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ContractError(f"{name} must be finite and non-negative, got {value}")
        if self.mean_size_ul <= 0 or self.mean_size_dl <= 0:
            raise ContractError("mean file sizes must be positive")

    @property
    def offered_ul(self) -> float:
        """Mean UL offered load in bits/s."""
        return self.lambda_ul * self.mean_size_ul

    @property
    def offered_dl(self) -> float:
        return self.lambda_dl * self.mean_size_dl

    def offered(self, link: Link | str) -> float:
        return self.offered_ul if Link.parse(link) is Link.UL else self.offered_dl

    def rate(self, link: Link | str) -> float:
        return self.lambda_ul if Link.parse(link) is Link.UL else self.lambda_dl

    def mean_size(self, link: Link | str) -> float:
        return self.mean_size_ul if Link.parse(link) is Link.UL else self.mean_size_dl

    @property
    def ratio_db(self) -> float:
        return 10.0 * math.log10(self.offered_ul / self.offered_dl)


def profile_from_ratio(total_offered_load: float, ratio_db: float, mean_size: float = DEFAULT_MEAN_SIZE_BITS) -> TrafficProfile:
    """Split ``total_offered_load`` (bits/s) into UL and DL by a dB ratio.

    >>> p = profile_from_ratio(10e6, 0.0)
    >>> p.offered_ul == p.offered_dl == 5e6
    True
    """
    if not total_offered_load > 0:
        raise ContractError("total_offered_load must be positive")
    if mean_size <= 0:
        raise ContractError("mean_size must be positive")
    share = 10.0 ** (ratio_db / 10.0)
    dl = total_offered_load / (1.0 + share)
    ul = total_offered_load - dl
    return TrafficProfile(ul / mean_size, dl / mean_size, mean_size, mean_size)


@dataclass
class FlowRecord:
    cell: int
    ue: int
    direction: Link
    size: float
    arrival: float
    residual: float = None  # type: ignore[assignment]
    completion: float | None = None
    served: float = 0.0

    def __post_init__(self):
        if self.residual is None:
            self.residual = self.size

    @property
    def delay(self) -> float | None:
        if self.completion is None:
            return None
        return self.completion - self.arrival

    @property
    def throughput(self) -> float | None:
        """Size over sojourn time, bits/s."""
        delay = self.delay
        if delay is None:
            return None
        return self.size / delay


def traffic_rng(seed: int, cell: int, link: Link | str) -> np.random.Generator:
    """Independent stream per (cell, direction) so runs are reproducible."""
    idx = 0 if Link.parse(link) is Link.UL else 1
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, cell, idx)))


def sample_arrivals(
    profile: TrafficProfile,
    interval: float,
    cell: int,
    num_ues: int,
    rng: np.random.Generator,
    link: Link | str,
    start: float = 0.0,
) -> list[FlowRecord]:
    """Draw one direction's arrivals in ``[start, start + interval)``.

    Counts are Poisson with mean ``lambda * interval``, arrival instants
    uniform given the count (so inter-arrivals are exponential), sizes
    exponential, and each flow goes to a uniformly chosen subscribed UE.
    """
    if not interval > 0:
        raise ContractError("interval must be positive")
    link = Link.parse(link)
    lam = profile.rate(link)
    if lam == 0:
        return []
    n = int(rng.poisson(lam * interval))
    if n == 0:
        return []
    times = start + np.sort(rng.uniform(0.0, interval, size=n))
    sizes = rng.exponential(profile.mean_size(link), size=n)
    ues = rng.integers(0, num_ues, size=n)
    return [
        FlowRecord(cell, int(u), link, float(s), float(t))
        for t, s, u in zip(times, sizes, ues)
    ]


TRACE_HEADER = "arrival,cell,ue,direction,size"


def write_traffic_trace(flows: Iterable[FlowRecord], path) -> None:
    lines = [TRACE_HEADER]
    for f in sorted(flows, key=lambda f: (f.arrival, f.cell, f.direction.value)):
        lines.append(f"{f.arrival!r},{f.cell},{f.ue},{f.direction.value},{f.size!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_traffic_trace(path) -> list[FlowRecord]:
    flows = []
    for line in Path(path).read_text().splitlines()[1:]:
        if not line.strip():
            continue
        arrival, cell, ue, direction, size = line.split(",")
        flows.append(FlowRecord(int(cell), int(ue), Link.parse(direction), float(size), float(arrival)))
    return flows
