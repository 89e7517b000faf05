"""Scenario configuration: defaults, validation and the key = value file format.

Example file::

    # 2 cells with opposite traffic asymmetry
    num_scbs = 2
    ratio_db = 20
    ratio_mode = opposite
    policy = learner

Omitted keys take the defaults below (10 MHz band, 6-subframe frames of
1 ms, 23 dBm transmitters, -174 dBm/Hz noise, 40 m cells, temperature
0.005, 200 learning frames, 20 s of simulated time).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .frame import FrameSchedule
from .learning import RateSchedule, baseline_fixed
from .topology import ConfigError, PowerConfig
from .traffic import TrafficProfile, profile_from_ratio

POLICIES = ("learner", "fixed", "random")
RATIO_MODES = ("same", "opposite")
TRAFFIC_MODES = ("poisson", "deterministic")


class ConfigFieldError(ConfigError):
    def __init__(self, field_name: str, constraint: str, value=None):
        self.field = field_name
        self.constraint = constraint
        super().__init__(f"{field_name}: {constraint} (got {value!r})")


@dataclass(frozen=True)
class ScenarioConfig:
    # topology
    num_scbs: int = 4
    area_side: float = 400.0
    cell_radius: float = 40.0
    min_separation: float = 80.0
    ues_per_cell: int = 20
    topology_file: str | None = None
    # radio
    bandwidth: float = 10e6
    num_subframes: int = 6
    subframe_duration: float = 1e-3
    scbs_tx_power: float = 23.0
    ue_tx_power: float = 23.0
    noise_density: float = -174.0
    penetration_loss: float = 10.0
    # traffic
    offered_load: float = 40e6
    ratio_db: float = 0.0
    ratio_mode: str = "same"
    cell_ratios_db: tuple[float, ...] | None = None
    mean_size: float = 0.5e6
    traffic_mode: str = "poisson"
    # policies and learning
    policy: str = "learner"
    policies: tuple[str, ...] | None = None
    fixed_switching_point: tuple[int, ...] | None = None
    temperature: float = 0.005
    alpha_exponent: float = 0.5
    zeta_exponent: float = 0.65
    max_learning_frames: int = 200
    # run
    sim_subframes: int = 20000
    seed: int = 0
    collect_after_freeze: bool = False

    def __post_init__(self):
        self.validate()

    # -- derived views -------------------------------------------------

    @property
    def num_switching_points(self) -> int:
        return self.num_subframes - 1

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature

    @property
    def power(self) -> PowerConfig:
        return PowerConfig(
            self.scbs_tx_power, self.ue_tx_power, self.noise_density, self.penetration_loss, self.bandwidth
        )

    @property
    def rates(self) -> RateSchedule:
        return RateSchedule(self.alpha_exponent, self.zeta_exponent)

    def cell_policies(self) -> tuple[str, ...]:
        return self.policies if self.policies is not None else (self.policy,) * self.num_scbs

    def fixed_points(self) -> tuple[int, ...]:
        if self.fixed_switching_point is None:
            return (baseline_fixed(self.num_switching_points),) * self.num_scbs
        if len(self.fixed_switching_point) == 1:
            return self.fixed_switching_point * self.num_scbs
        return self.fixed_switching_point

    def cell_ratios(self) -> tuple[float, ...]:
        if self.cell_ratios_db is not None:
            return self.cell_ratios_db
        if self.ratio_mode == "opposite":
            half = self.num_scbs // 2 + self.num_scbs % 2
            return tuple(self.ratio_db if b < half else -self.ratio_db for b in range(self.num_scbs))
        return (self.ratio_db,) * self.num_scbs

    def traffic_profiles(self) -> list[TrafficProfile]:
        if self.offered_load == 0:
            return [TrafficProfile(0.0, 0.0, self.mean_size, self.mean_size) for _ in range(self.num_scbs)]
        return [profile_from_ratio(self.offered_load, r, self.mean_size) for r in self.cell_ratios()]

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # -- validation ----------------------------------------------------

    def validate(self) -> None:
        def need(ok, name, constraint):
            if not ok:
                raise ConfigFieldError(name, constraint, getattr(self, name))

        need(self.num_scbs >= 1, "num_scbs", "must be >= 1")
        need(self.area_side > 0, "area_side", "must be > 0")
        need(self.cell_radius > 0, "cell_radius", "must be > 0")
        need(self.min_separation >= 0, "min_separation", "must be >= 0")
        need(1 <= self.ues_per_cell <= 20, "ues_per_cell", "must lie in 1..20")
        need(self.bandwidth > 0, "bandwidth", "must be > 0")
        need(self.num_subframes >= 2, "num_subframes", "must be >= 2")
        need(self.subframe_duration > 0, "subframe_duration", "must be > 0")
        for name in ("scbs_tx_power", "ue_tx_power", "noise_density", "penetration_loss", "ratio_db"):
            need(math.isfinite(getattr(self, name)), name, "must be finite")
        need(self.offered_load >= 0 and math.isfinite(self.offered_load), "offered_load", "must be finite and >= 0")
        need(self.ratio_mode in RATIO_MODES, "ratio_mode", f"must be one of {RATIO_MODES}")
        if self.cell_ratios_db is not None:
            need(len(self.cell_ratios_db) == self.num_scbs, "cell_ratios_db", "needs one value per SCBS")
        need(self.mean_size > 0, "mean_size", "must be > 0")
        need(self.traffic_mode in TRAFFIC_MODES, "traffic_mode", f"must be one of {TRAFFIC_MODES}")
        need(self.policy in POLICIES, "policy", f"must be one of {POLICIES}")
        if self.policies is not None:
            need(len(self.policies) == self.num_scbs, "policies", "needs one policy per SCBS")
            need(all(p in POLICIES for p in self.policies), "policies", f"entries must be in {POLICIES}")
        if self.fixed_switching_point is not None:
            need(
                len(self.fixed_switching_point) in (1, self.num_scbs),
                "fixed_switching_point",
                "needs one value or one per SCBS",
            )
            need(
                all(1 <= w <= self.num_switching_points for w in self.fixed_switching_point),
                "fixed_switching_point",
                f"must lie in 1..{self.num_switching_points} (W_f = num_subframes - 1)",
            )
        need(self.temperature > 0, "temperature", "must be > 0")
        need(self.alpha_exponent > 0, "alpha_exponent", "must be > 0")
        need(self.zeta_exponent > 0, "zeta_exponent", "must be > 0")
        need(self.max_learning_frames >= 0, "max_learning_frames", "must be >= 0")
        need(self.sim_subframes >= self.num_subframes, "sim_subframes", "must cover at least one frame")
        # fails early on a bad frame layout
        FrameSchedule((1,) * self.num_scbs, self.num_subframes, self.subframe_duration)


_TUPLE_FIELDS = {
    "cell_ratios_db": float,
    "policies": str,
    "fixed_switching_point": int,
}
_SCALAR_TYPES = {
    "num_scbs": int,
    "ues_per_cell": int,
    "num_subframes": int,
    "max_learning_frames": int,
    "sim_subframes": int,
    "seed": int,
    "collect_after_freeze": bool,
    "topology_file": str,
    "ratio_mode": str,
    "traffic_mode": str,
    "policy": str,
}
FIELD_NAMES = tuple(f.name for f in fields(ScenarioConfig))


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _convert(name: str, text: str):
    text = text.strip()
    if text.lower() in ("none", ""):
        if name in _TUPLE_FIELDS or name == "topology_file":
            return None
    try:
        if name in _TUPLE_FIELDS:
            kind = _TUPLE_FIELDS[name]
            return tuple(kind(v.strip()) for v in text.split(",") if v.strip())
        kind = _SCALAR_TYPES.get(name, float)
        if kind is bool:
            return _parse_bool(text)
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError("not an integer")
            return int(value)
        return kind(text)
    except ValueError as exc:
        raise ConfigFieldError(name, f"cannot parse value ({exc})", text) from None


def parse_config_text(text: str, **overrides) -> ScenarioConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_NAMES:
            raise ConfigFieldError(key, "unknown key", val)
        values[key] = _convert(key, val)
    values.update(overrides)
    return ScenarioConfig(**values)


def parse_config(path, **overrides) -> ScenarioConfig:
    """Read a scenario file; omitted keys keep their defaults."""
    return parse_config_text(Path(path).read_text(), **overrides)


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ScenarioConfig) -> str:
    return "".join(f"{name} = {_format(getattr(cfg, name))}\n" for name in FIELD_NAMES)


def write_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(emit_config(cfg))
