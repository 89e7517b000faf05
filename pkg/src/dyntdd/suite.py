"""Experiment suites: variants x policies x seeds, aggregated per (variant, policy)."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .config import POLICIES, ScenarioConfig
from .engine import MetricsReport, ThroughputStats, run_simulation

log = logging.getLogger(__name__)

DEFAULT_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class Variant:
    label: str
    config: ScenarioConfig


@dataclass(frozen=True)
class ExperimentSuite:
    name: str
    variants: tuple[Variant, ...]
    policies: tuple[str, ...] = POLICIES
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    keep_reports: bool = False

    def __post_init__(self):
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError("variant labels must be unique")
        for p in self.policies:
            if p not in POLICIES:
                raise ValueError(f"unknown policy {p!r}")
        for v in self.variants:
            v.config.validate()

    def runs(self):
        for v in self.variants:
            for policy in self.policies:
                for seed in self.seeds:
                    yield (v.label, policy, seed), v.config.with_(policy=policy, policies=None, seed=seed)


@dataclass
class RunOutcome:
    throughput: ThroughputStats | None
    summary: str | None
    report: MetricsReport | None = None
    error: str | None = None


@dataclass
class SummaryRow:
    variant: str
    policy: str
    num_scbs: int
    ratio_db: float
    ratio_mode: str
    runs: int
    failures: int
    mean_throughput: float | None
    ci95: float | None
    mean_ul: float | None
    mean_dl: float | None
    errors: list[str] = field(default_factory=list)


@dataclass
class SuiteReport:
    suite: ExperimentSuite
    outcomes: dict
    rows: list[SummaryRow]

    @property
    def ok(self) -> bool:
        return all(o.error is None for o in self.outcomes.values())

    def row(self, variant: str, policy: str) -> SummaryRow:
        for r in self.rows:
            if r.variant == variant and r.policy == policy:
                return r
        raise KeyError((variant, policy))

    def to_text(self) -> str:
        header = "suite,variant,policy,num_scbs,ratio_db,ratio_mode,runs,failures,mean_throughput_bps,ci95_bps,mean_ul_bps,mean_dl_bps"
        lines = [header]
        for r in self.rows:
            vals = [
                self.suite.name, r.variant, r.policy, r.num_scbs, r.ratio_db, r.ratio_mode, r.runs, r.failures,
                r.mean_throughput, r.ci95, r.mean_ul, r.mean_dl,
            ]
            lines.append(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in vals))
        return "\n".join(lines) + "\n"


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple[float | None, float | None]:
    """Sample mean and Student-t confidence half-width (None below 2 samples)."""
    x = np.asarray([v for v in values if v is not None], dtype=float)
    if len(x) == 0:
        return None, None
    mean = float(x.mean())
    if len(x) < 2:
        return mean, None
    half = float(stats.t.ppf(0.5 + level / 2, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))
    return mean, half


def _execute(args) -> tuple:
    key, cfg, keep = args
    try:
        report = run_simulation(cfg)
    except Exception as exc:  # a failing variant must not stop the suite
        return key, RunOutcome(None, None, None, f"{type(exc).__name__}: {exc}")
    return key, RunOutcome(report.throughput, report.to_text(), report if keep else None)


def _aggregate(suite: ExperimentSuite, outcomes: dict) -> list[SummaryRow]:
    rows = []
    for v in suite.variants:
        for policy in suite.policies:
            outs = [outcomes[(v.label, policy, s)] for s in suite.seeds]
            good = [o for o in outs if o.error is None]
            means = [o.throughput.mean for o in good if not o.throughput.is_empty]
            mean, ci = mean_ci(means)
            ul, _ = mean_ci([o.throughput.mean_ul for o in good])
            dl, _ = mean_ci([o.throughput.mean_dl for o in good])
            cfg = v.config
            rows.append(
                SummaryRow(
                    v.label, policy, cfg.num_scbs, float(cfg.ratio_db), cfg.ratio_mode, len(outs),
                    len(outs) - len(good), mean, ci, ul, dl, [o.error for o in outs if o.error],
                )
            )
    return rows


def run_suite(suite: ExperimentSuite, parallelism: int = 1) -> SuiteReport:
    """Run every (variant, policy, seed) and aggregate throughput per (variant, policy).

    Results are keyed by run, so the summary does not depend on execution
    order or on ``parallelism``.
    """
    jobs = [(key, cfg, suite.keep_reports) for key, cfg in suite.runs()]
    outcomes: dict = {}
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for key, outcome in pool.map(_execute, jobs):
                outcomes[key] = outcome
    else:
        for job in jobs:
            key, outcome = _execute(job)
            outcomes[key] = outcome
    for key, outcome in outcomes.items():
        if outcome.error:
            log.error("run %s failed: %s", key, outcome.error)
    return SuiteReport(suite, outcomes, _aggregate(suite, outcomes))


def write_suite(report: SuiteReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{report.suite.name}_summary.csv"
    path.write_text(report.to_text())
    return path


def builtin_suite(name: str, base: ScenarioConfig | None = None, seeds: Sequence[int] = DEFAULT_SEEDS) -> ExperimentSuite:
    """Suites reproducing the ratio sweep, opposite ratios, cell count and convergence experiments."""
    base = base or ScenarioConfig()
    seeds = tuple(seeds)
    if name == "fig3-ratio-sweep":
        variants = tuple(
            Variant(f"ratio{r:+d}dB", base.with_(num_scbs=4, ratio_db=float(r), ratio_mode="same"))
            for r in (-20, -10, 0, 10, 20)
        )
        return ExperimentSuite(name, variants, seeds=seeds)
    if name == "fig4-opposite-ratios":
        variants = tuple(
            Variant(f"opposite{r}dB", base.with_(num_scbs=4, ratio_db=float(r), ratio_mode="opposite"))
            for r in (0, 10, 20)
        )
        return ExperimentSuite(name, variants, seeds=seeds)
    if name == "fig5-cell-count":
        variants = tuple(
            Variant(f"cells{n}", base.with_(num_scbs=n, ratio_db=10.0, ratio_mode="same"))
            for n in (2, 4, 6, 8, 10)
        )
        return ExperimentSuite(name, variants, seeds=seeds)
    if name == "fig56-convergence":
        cfg = base.with_(num_scbs=2, ratio_db=20.0, ratio_mode="opposite")
        return ExperimentSuite(name, (Variant("opposite20dB", cfg),), policies=("learner",), seeds=seeds, keep_reports=True)
    raise KeyError(f"unknown suite {name!r}; choose from {', '.join(BUILTIN_SUITES)}")


BUILTIN_SUITES = ("fig3-ratio-sweep", "fig4-opposite-ratios", "fig5-cell-count", "fig56-convergence")
