"""Plain-text (CSV with header) outputs of a simulation run."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import write_config
from .engine import MetricsReport
from .traffic import write_traffic_trace


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "" if np.isnan(x) else repr(float(x))
    return str(x)


def emit_traces(report: MetricsReport, out_dir) -> list[Path]:
    """One strategy trace per cell plus the per-frame cost trace.

    ``strategy_cell<b>.csv`` columns: ``frame, action, observed_cost,
    p_w1..p_wW, est_w1..est_wW`` (probabilities after the frame-end
    update; estimates are empty for baseline policies).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_frames, n_cells, n_actions = report.strategies.shape if report.num_frames else (0, report.config.num_scbs, report.config.num_switching_points)
    probs = [f"p_w{a + 1}" for a in range(n_actions)]
    ests = [f"est_w{a + 1}" for a in range(n_actions)]
    paths = []
    for b in range(n_cells):
        lines = [",".join(["frame", "action", "observed_cost", *probs, *ests])]
        for t in range(n_frames):
            row = [str(t + 1), str(int(report.actions[t, b])), _fmt(report.cell_costs[t, b])]
            row += [_fmt(p) for p in report.strategies[t, b]]
            row += [_fmt(e) for e in report.estimates[t, b]]
            lines.append(",".join(row))
        path = out / f"strategy_cell{b}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)

    header = ["frame", "global_cost", *[f"cost_cell{b}" for b in range(n_cells)], "feasible", "idle_feasible"]
    lines = [",".join(header)]
    totals = report.cost_trace
    for t in range(n_frames):
        row = [str(t + 1), _fmt(totals[t]), *[_fmt(c) for c in report.cell_costs[t]]]
        row += [str(bool(report.feasible[t])).lower(), str(bool(report.idle_feasible[t])).lower()]
        lines.append(",".join(row))
    path = out / "cost_trace.csv"
    path.write_text("\n".join(lines) + "\n")
    paths.append(path)
    return paths


def write_load_trace(report: MetricsReport, path) -> None:
    """Long format: frame, cell, subframe, direction, unclamped load."""
    lines = ["frame,cell,subframe,direction,rho"]
    for t in range(report.num_frames):
        for b in range(report.loads.shape[1]):
            w = int(report.actions[t, b])
            for j in range(report.loads.shape[2]):
                direction = "UL" if j + 1 <= w else "DL"
                lines.append(f"{t + 1},{b},{j + 1},{direction},{_fmt(report.loads[t, b, j])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_flow_dump(report: MetricsReport, path) -> None:
    lines = ["cell,ue,direction,size,arrival,completion,delay,throughput"]
    for f in sorted(report.completed, key=lambda f: (f.arrival, f.cell, f.direction.value)):
        lines.append(
            f"{f.cell},{f.ue},{f.direction.value},{f.size!r},{f.arrival!r},{f.completion!r},{f.delay!r},{f.throughput!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_run(report: MetricsReport, out_dir, *, flows: bool = False, loads: bool = False, sim=None) -> list[Path]:
    """Summary, config echo and traces of one run; optional per-flow and load dumps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(report.to_text())
    write_config(report.config, out / "config.txt")
    paths = [out / "summary.csv", out / "config.txt", *emit_traces(report, out)]
    if sim is not None:
        sim.topo.save(out / "topology.txt")
        write_traffic_trace(sim.generated, out / "traffic.csv")
        paths += [out / "topology.txt", out / "traffic.csv"]
    if flows:
        write_flow_dump(report, out / "flows.csv")
        paths.append(out / "flows.csv")
    if loads:
        write_load_trace(report, out / "loads.csv")
        paths.append(out / "loads.csv")
    return paths
