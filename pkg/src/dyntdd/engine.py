"""Flow-level, subframe-by-subframe simulation of a dynamic-TDD small-cell network.

Within a subframe every cell serves the flows of its current direction
with an equal share of the band each (processor sharing). Each cell also
measures its load over all subscribed UE positions under the
subframe's actual interference, and the frame's delay cost built from
those loads is what the learners observe at frame end.
"""
from __future__ import annotations

import io
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, emit_config
from .frame import CellLoadSnapshot, FrameSchedule, Link
from .game import feasibility, per_cell_cost
from .learning import GibbsLearner, make_policies
from .topology import ChannelMap, NetworkTopology, generate_topology
from .traffic import FlowRecord, sample_arrivals, traffic_rng

log = logging.getLogger(__name__)

_DIRS = (Link.UL, Link.DL)


@dataclass(frozen=True)
class ThroughputStats:
    """Packet throughput (bits/s) of completed flows; ``None`` fields mean no flows."""

    count: int
    mean: float | None
    median: float | None
    count_ul: int
    mean_ul: float | None
    count_dl: int
    mean_dl: float | None

    @property
    def is_empty(self) -> bool:
        return self.count == 0


def packet_throughput(flows) -> ThroughputStats:
    done = [f for f in flows if f.completion is not None]
    if not done:
        return ThroughputStats(0, None, None, 0, None, 0, None)
    tp = np.array([f.throughput for f in done])
    if np.any(tp <= 0):
        raise ValueError("completed flow with non-positive throughput")
    ul = np.array([f.direction is Link.UL for f in done])

    def mean_or_none(x):
        return float(x.mean()) if len(x) else None

    return ThroughputStats(
        count=len(done),
        mean=float(tp.mean()),
        median=float(np.median(tp)),
        count_ul=int(ul.sum()),
        mean_ul=mean_or_none(tp[ul]),
        count_dl=int((~ul).sum()),
        mean_dl=mean_or_none(tp[~ul]),
    )


@dataclass
class MetricsReport:
    config: ScenarioConfig
    throughput: ThroughputStats
    completed: list[FlowRecord]
    pending: int
    actions: np.ndarray  # (frames, B) switching points
    cell_costs: np.ndarray  # (frames, B) observed per-cell costs
    strategies: np.ndarray  # (frames, B, W) strategy after the frame-end update
    estimates: np.ndarray  # (frames, B, W) cost estimates, NaN for baselines
    loads: np.ndarray  # (frames, B, N_f) unclamped loads
    feasible: np.ndarray  # (frames,) strict feasibility of the frame
    idle_feasible: np.ndarray  # (frames,) upper bound only

    @property
    def cost_trace(self) -> np.ndarray:
        """Global cost of each frame (sum of per-cell costs)."""
        return self.cell_costs.sum(axis=1)

    @property
    def num_frames(self) -> int:
        return self.actions.shape[0]

    def summary_rows(self) -> list[tuple[str, str]]:
        def fmt(v):
            return "" if v is None else repr(v)

        tp = self.throughput
        rows = [
            ("seed", str(self.config.seed)),
            ("frames", str(self.num_frames)),
            ("completed_flows", str(tp.count)),
            ("completed_ul", str(tp.count_ul)),
            ("completed_dl", str(tp.count_dl)),
            ("pending_flows", str(self.pending)),
            ("throughput_empty", "true" if tp.is_empty else "false"),
            ("mean_throughput_bps", fmt(tp.mean)),
            ("median_throughput_bps", fmt(tp.median)),
            ("mean_throughput_ul_bps", fmt(tp.mean_ul)),
            ("mean_throughput_dl_bps", fmt(tp.mean_dl)),
            ("mean_global_cost", fmt(float(self.cost_trace.mean()) if self.num_frames else None)),
            ("feasible_frames", str(int(self.feasible.sum()))),
            ("idle_feasible_frames", str(int(self.idle_feasible.sum()))),
        ]
        if self.num_frames:
            final = self.strategies[-1]
            for b in range(final.shape[0]):
                rows.append((f"final_strategy_cell{b}", " ".join(repr(float(p)) for p in final[b])))
        return rows

    def to_text(self) -> str:
        """Run summary as ``metric,value`` CSV followed by the config echo."""
        buf = io.StringIO()
        buf.write("metric,value\n")
        for key, val in self.summary_rows():
            buf.write(f"{key},{val}\n")
        for line in emit_config(self.config).splitlines():
            key, val = line.split(" = ", 1)
            buf.write(f"config.{key},{val.replace(',', ' ')}\n")
        return buf.getvalue()


@dataclass
class _Queue:
    """Flows of one cell and one direction."""

    pending: deque = field(default_factory=deque)  # generated, not yet arrived
    waiting: deque = field(default_factory=deque)  # arrived, UE busy
    active: dict = field(default_factory=dict)  # ue -> FlowRecord


class Simulation:
    """Mutable engine state; drive it with :meth:`run_frame` or :meth:`run`."""

    def __init__(self, cfg: ScenarioConfig, topo: NetworkTopology | None = None):
        self.cfg = cfg
        if topo is None:
            if cfg.topology_file:
                topo = NetworkTopology.load(cfg.topology_file)
            else:
                topo = generate_topology(
                    cfg.num_scbs, cfg.area_side, cfg.cell_radius, cfg.ues_per_cell, cfg.seed,
                    min_separation=cfg.min_separation,
                )
        if topo.num_scbs != cfg.num_scbs:
            raise ValueError("topology and config disagree on the number of SCBSs")
        self.topo = topo
        self.power = cfg.power
        self.channels = ChannelMap(topo, self.power)
        self.profiles = cfg.traffic_profiles()
        self.deterministic = cfg.traffic_mode == "deterministic"
        n, u = topo.num_scbs, topo.ues_per_cell
        self.num_cells, self.num_ues = n, u
        self.frame_len = cfg.num_subframes
        self.dt = cfg.subframe_duration

        self.gamma = np.array([[p.offered_ul for p in self.profiles], [p.offered_dl for p in self.profiles]])
        self.noise_full = self.power.noise_power()
        self.noise_density = self.power.noise_power(1.0)
        self._bandwidth = self.power.bandwidth_total
        self._all_tx = np.ones(n, dtype=bool)
        self._reps = np.zeros(n, dtype=int)
        self.signal_ul = self.power.p_ue * self.channels.serving
        self.signal_dl = self.power.p_scbs * self.channels.serving

        self.queues = [{d: _Queue() for d in _DIRS} for _ in range(n)]
        self.traffic_rngs = [{d: traffic_rng(cfg.seed, b, d) for d in _DIRS} for b in range(n)]
        self.interf_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2,)))
        policy_rngs = [np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(3, b))) for b in range(n)]
        fixed = cfg.fixed_points()
        self.policies = []
        for b, kind in enumerate(cfg.cell_policies()):
            self.policies += make_policies(
                [kind],
                cfg.num_switching_points,
                [policy_rngs[b]],
                fixed_point=fixed[b],
                **({"beta": cfg.beta, "rates": cfg.rates, "max_iterations": cfg.max_learning_frames} if kind == "learner" else {}),
            )

        self.subframe_index = 0  # global, 0-based
        self.frame_index = 0
        self.completed: list[FlowRecord] = []
        self.generated: list[FlowRecord] = []
        self.schedule: FrameSchedule | None = None
        self._frame_loads: np.ndarray | None = None
        self._traces: dict[str, list] = {k: [] for k in ("actions", "costs", "strategies", "estimates", "loads", "feasible", "idle")}

    # -- traffic ---------------------------------------------------------

    @property
    def now(self) -> float:
        return self.subframe_index * self.dt

    def _generate_arrivals(self, num_subframes: int) -> None:
        if self.deterministic:
            return
        start = self.now
        for b in range(self.num_cells):
            for d in _DIRS:
                flows = sample_arrivals(
                    self.profiles[b], num_subframes * self.dt, b, self.num_ues, self.traffic_rngs[b][d], d, start
                )
                self.queues[b][d].pending.extend(flows)
                self.generated.extend(flows)

    def _admit(self, q: _Queue, t: float) -> None:
        while q.pending and q.pending[0].arrival <= t:
            q.waiting.append(q.pending.popleft())
        if not q.waiting:
            return
        still = deque()
        for flow in q.waiting:
            if flow.ue in q.active:
                still.append(flow)
            else:
                q.active[flow.ue] = flow
        q.waiting = still

    # -- one subframe ----------------------------------------------------

    def run_subframe(self, j: int) -> None:
        """Serve 1-based subframe ``j`` of the current frame and record its loads."""
        t = self.now
        n = self.num_cells
        ul = self._ul[:, j - 1]
        ul_list = ul.tolist()

        active_sets = []
        for b in range(n):
            q = self.queues[b][Link.UL if ul_list[b] else Link.DL]
            self._admit(q, t)
            active_sets.append(q.active)

        if self.deterministic:
            tx = self._all_tx
            reps = None
        else:
            tx = np.fromiter((len(a) > 0 for a in active_sets), dtype=bool, count=n)
            reps = self._reps
            for b in range(n):
                if ul_list[b] and active_sets[b]:
                    ues = list(active_sets[b])
                    reps[b] = ues[int(self.interf_rng.integers(len(ues)))]
        at_scbs, at_ue = self.channels.interference(ul, tx, reps)
        interf = np.where(ul[:, None], at_scbs[:, None], at_ue)
        signal = np.where(ul[:, None], self.signal_ul, self.signal_dl)

        # loads over all subscribed UE positions at full-band rates
        full_rate = self._bandwidth * np.log2(1.0 + signal / (self.noise_full + interf))
        self._frame_loads[:, j - 1] = self._load_scale[:, j - 1] * (1.0 / full_rate).sum(axis=1)

        # processor-sharing service
        dt = self.dt
        for b in range(n):
            active = active_sets[b]
            if not active:
                continue
            share = self._bandwidth / len(active)
            noise = self.noise_density * share
            sig_row = signal[b].tolist()
            int_row = interf[b].tolist()
            for flow in list(active.values()):
                u = flow.ue
                r = share * math.log2(1.0 + sig_row[u] / (noise + int_row[u]))
                budget = r * dt
                if flow.residual <= budget:
                    flow.completion = t + flow.residual / r
                    flow.served += flow.residual
                    flow.residual = 0.0
                    del active[u]
                    self.completed.append(flow)
                else:
                    flow.residual -= budget
                    flow.served += budget
        self.subframe_index += 1

    # -- one frame -------------------------------------------------------

    def run_frame(self, num_subframes: int | None = None) -> None:
        """Pick switching points, run the subframes, then let policies learn.

        A truncated frame (``num_subframes`` below the frame length) serves
        traffic but produces no cost observation.
        """
        length = self.frame_len if num_subframes is None else num_subframes
        actions = tuple(p.choose() for p in self.policies)
        self.schedule = FrameSchedule(actions, self.frame_len, self.dt)
        self._frame_loads = np.zeros((self.num_cells, self.frame_len))
        w = np.asarray(actions)[:, None]
        j = np.arange(1, self.frame_len + 1)[None, :]
        self._ul = j <= w
        duty = np.where(self._ul, w, self.frame_len - w) / self.frame_len
        gamma = np.where(self._ul, self.gamma[0][:, None], self.gamma[1][:, None])
        # load = (gamma / U) * sum_u 1/c_u / duty
        self._load_scale = gamma / self.num_ues / duty
        self._generate_arrivals(length)
        for j in range(1, length + 1):
            self.run_subframe(j)
        if length < self.frame_len:
            return
        loads = CellLoadSnapshot(self.schedule, self._frame_loads)
        costs = np.array([per_cell_cost(b, actions, loads) for b in range(self.num_cells)])
        for b, policy in enumerate(self.policies):
            policy.observe(actions[b], float(costs[b]))
        tr = self._traces
        tr["actions"].append(actions)
        tr["costs"].append(costs)
        tr["strategies"].append(np.array([p.strategy() for p in self.policies]))
        tr["estimates"].append(
            np.array([p.estimates() if p.estimates() is not None else np.full(self.frame_len - 1, np.nan) for p in self.policies])
        )
        tr["loads"].append(loads.raw)
        tr["feasible"].append(feasibility(actions, loads, strict=True))
        tr["idle"].append(feasibility(actions, loads, strict=False))
        self.frame_index += 1

    def run(self) -> MetricsReport:
        total = self.cfg.sim_subframes
        full, rest = divmod(total, self.frame_len)
        for _ in range(full):
            self.run_frame()
        if rest:
            self.run_frame(rest)
        return self.report()

    def report(self) -> MetricsReport:
        cfg = self.cfg
        flows = self.completed
        if cfg.collect_after_freeze:
            t0 = cfg.max_learning_frames * self.frame_len * self.dt
            flows = [f for f in flows if f.arrival >= t0]
        pending = sum(
            len(q.pending) + len(q.waiting) + len(q.active) for cell in self.queues for q in cell.values()
        )
        tr = self._traces
        n, wn, nf = self.num_cells, self.frame_len - 1, self.frame_len

        def stack(key, shape, dtype=float):
            return np.array(tr[key], dtype=dtype) if tr[key] else np.zeros((0,) + shape, dtype=dtype)

        return MetricsReport(
            config=cfg,
            throughput=packet_throughput(flows),
            completed=list(flows),
            pending=pending,
            actions=stack("actions", (n,), int),
            cell_costs=stack("costs", (n,)),
            strategies=stack("strategies", (n, wn)),
            estimates=stack("estimates", (n, wn)),
            loads=stack("loads", (n, nf)),
            feasible=stack("feasible", (), bool),
            idle_feasible=stack("idle", (), bool),
        )

    def learners(self) -> list[GibbsLearner]:
        return [p for p in self.policies if isinstance(p, GibbsLearner)]


def run_simulation(cfg: ScenarioConfig, topo: NetworkTopology | None = None) -> MetricsReport:
    log.debug("running seed=%s policies=%s", cfg.seed, cfg.cell_policies())
    return Simulation(cfg, topo).run()


__all__ = [
    "MetricsReport",
    "Simulation",
    "ThroughputStats",
    "packet_throughput",
    "run_simulation",
]
