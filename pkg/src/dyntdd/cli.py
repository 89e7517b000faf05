"""Command-line front end.

    dyntdd run --config scenario.txt --out runs/a
    dyntdd suite fig3-ratio-sweep --seeds 0-9 --jobs 4 --out results
    dyntdd oracle --config two_cells.txt --out tensor.csv
    dyntdd check-schedule --alpha 0.6 --zeta 0.65
    dyntdd defaults
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import POLICIES, ScenarioConfig, emit_config, parse_config
from .engine import Simulation
from .game import build_cost_tensor, epsilon_bound, write_cost_tensor
from .learning import RateSchedule, validate_schedule
from .output import emit_traces, write_run
from .suite import BUILTIN_SUITES, builtin_suite, run_suite, write_suite
from .topology import ConfigError, NetworkTopology, generate_topology

log = logging.getLogger("dyntdd")


def parse_seeds(text: str) -> list[int]:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,8"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def _load_config(args, **overrides) -> ScenarioConfig:
    if getattr(args, "policy", None):
        overrides["policy"] = args.policy
        overrides["policies"] = None
    if args.config:
        return parse_config(args.config, **overrides)
    return ScenarioConfig(**overrides)


def _cmd_run(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = _load_config(args, **overrides)
    sim = Simulation(cfg)
    report = sim.run()
    paths = write_run(report, args.out, flows=args.flows, loads=args.loads, sim=sim)
    tp = report.throughput
    if tp.is_empty:
        print("no flow completed; throughput undefined")
    else:
        print(f"mean packet throughput {tp.mean / 1e6:.3f} Mbit/s over {tp.count} flows ({report.pending} pending)")
    log.info("wrote %d files to %s", len(paths), args.out)
    return 0


def _cmd_suite(args) -> int:
    base = parse_config(args.config) if args.config else ScenarioConfig()
    suite = builtin_suite(args.name, base, args.seeds)
    if args.policy:
        suite = type(suite)(suite.name, suite.variants, (args.policy,), suite.seeds, suite.keep_reports)
    report = run_suite(suite, args.jobs)
    path = write_suite(report, args.out)
    for (label, policy, seed), outcome in sorted(report.outcomes.items()):
        if outcome.report is not None:
            emit_traces(outcome.report, Path(args.out) / f"{label}_{policy}_seed{seed}")
    for row in report.rows:
        if row.mean_throughput is None:
            shown = "n/a"
        else:
            ci = "" if row.ci95 is None else f" +- {row.ci95 / 1e6:.3f}"
            shown = f"{row.mean_throughput / 1e6:.3f}{ci} Mbit/s"
        print(f"{row.variant:<16} {row.policy:<8} {shown}" + (f"  ({row.failures} failed)" if row.failures else ""))
    log.info("summary written to %s", path)
    return 0 if report.ok else 1


def _cmd_oracle(args) -> int:
    cfg = _load_config(args)
    topo = (
        NetworkTopology.load(cfg.topology_file)
        if cfg.topology_file
        else generate_topology(
            cfg.num_scbs, cfg.area_side, cfg.cell_radius, cfg.ues_per_cell, cfg.seed, min_separation=cfg.min_separation
        )
    )
    tensor = build_cost_tensor(topo, cfg.power, cfg.traffic_profiles(), cfg.num_subframes)
    write_cost_tensor(tensor, args.out)
    eps = epsilon_bound(cfg.beta, cfg.num_switching_points)
    print(f"cost tensor with {tensor[..., 0].size} profiles written to {args.out}")
    print(f"logit-equilibrium epsilon bound: {eps:.6g}")
    return 0


def _cmd_check_schedule(args) -> int:
    check = validate_schedule(RateSchedule(args.alpha, args.zeta), terms=args.terms)
    if check.ok:
        print(f"schedule alpha=t^-{args.alpha}, zeta=t^-{args.zeta}: ok")
        return 0
    print(f"schedule alpha=t^-{args.alpha}, zeta=t^-{args.zeta} violates:")
    for v in check.violations():
        print(f"  {v}")
    return 1


def _cmd_defaults(args) -> int:
    sys.stdout.write(emit_config(ScenarioConfig()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyntdd", description="Dynamic TDD small-cell simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--config", help="scenario file (key = value)")
    p.add_argument("--out", default="run_out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--policy", choices=POLICIES, help="override the policy of every cell")
    p.add_argument("--flows", action="store_true", help="also dump per-flow records")
    p.add_argument("--loads", action="store_true", help="also dump per-subframe loads")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("suite", help="run a built-in experiment suite")
    p.add_argument("name", choices=BUILTIN_SUITES)
    p.add_argument("--config", help="base scenario file for all variants")
    p.add_argument("--out", default="suite_out")
    p.add_argument("--seeds", type=parse_seeds, default=list(range(10)), help="e.g. 0-9 or 1,3,5")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--policy", choices=POLICIES, help="run only this policy")
    p.set_defaults(func=_cmd_suite)

    p = sub.add_parser("oracle", help="enumerate the expected-cost tensor of a small scenario")
    p.add_argument("--config")
    p.add_argument("--out", default="cost_tensor.csv")
    p.set_defaults(func=_cmd_oracle, policy=None)

    p = sub.add_parser("check-schedule", help="check learning step sizes for convergence")
    p.add_argument("--alpha", type=float, default=0.5, help="exponent p of alpha(t) = t^-p")
    p.add_argument("--zeta", type=float, default=0.65, help="exponent p of zeta(t) = t^-p")
    p.add_argument("--terms", type=int, default=10**6)
    p.set_defaults(func=_cmd_check_schedule)

    p = sub.add_parser("defaults", help="print the default configuration")
    p.set_defaults(func=_cmd_defaults)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dyntdd: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dyntdd: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
