"""Gibbs-sampling reinforcement learner and baseline duplexing policies.

Each SCBS runs two coupled stochastic-approximation processes: a running
estimate of the cost of every switching point, updated only for the
action actually played, and a mixed strategy that drifts toward the
Gibbs (softmax) distribution of those estimates. The strategy moves on a
slower time scale than the estimates.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frame import ContractError

SIMPLEX_TOL = 1e-9


def gibbs_distribution(costs, beta: float) -> np.ndarray:
    """Softmax of ``-beta * costs``, shifted by the minimum cost for stability."""
    if not beta > 0:
        raise ContractError("beta must be positive")
    j = np.asarray(costs, dtype=float)
    if not np.all(np.isfinite(j)):
        raise ContractError("costs must be finite")
    z = np.exp(-beta * (j - j.min()))
    return z / z.sum()


def _check_simplex(p: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    if p.ndim != 1 or np.any(p < -tol) or abs(float(p.sum()) - 1.0) > tol:
        raise ContractError(f"not a probability vector: {p}")


@dataclass(frozen=True)
class LearnerState:
    cost_estimates: np.ndarray
    strategy: np.ndarray
    iteration: int = 0
    beta: float = 200.0
    frozen: bool = False

    @classmethod
    def initial(cls, num_actions: int, beta: float) -> "LearnerState":
        if num_actions < 1:
            raise ContractError("num_actions must be >= 1")
        return cls(np.zeros(num_actions), np.full(num_actions, 1.0 / num_actions), 0, beta)

    @property
    def num_actions(self) -> int:
        return len(self.strategy)


def update_cost_estimate(state: LearnerState, played_action: int, observed_cost: float, alpha: float) -> LearnerState:
    """Move the played action's estimate toward ``observed_cost`` by ``alpha``."""
    if not 0 < alpha <= 1:
        raise ContractError("alpha must lie in (0, 1]")
    if not math.isfinite(observed_cost):
        raise ContractError("observed cost must be finite")
    est = state.cost_estimates.copy()
    est[played_action] += alpha * (observed_cost - est[played_action])
    return dataclasses.replace(state, cost_estimates=est)


def update_strategy(state: LearnerState, zeta: float) -> LearnerState:
    if not 0 < zeta <= 1:
        raise ContractError("zeta must lie in (0, 1]")
    _check_simplex(state.strategy)
    target = gibbs_distribution(state.cost_estimates, state.beta)
    pi = state.strategy + zeta * (target - state.strategy)
    pi = np.clip(pi, 0.0, None)
    return dataclasses.replace(state, strategy=pi / pi.sum())


@dataclass(frozen=True)
class RateSchedule:
    """Step sizes ``alpha(n) = n**-alpha_exponent``, ``zeta(n) = n**-zeta_exponent``."""

    alpha_exponent: float = 0.5
    zeta_exponent: float = 0.65

    def __call__(self, n: int) -> tuple[float, float]:
        return learning_rates(n, self.alpha_exponent, self.zeta_exponent)


def learning_rates(n: int, alpha_exponent: float = 0.5, zeta_exponent: float = 0.65) -> tuple[float, float]:
    if n < 1:
        raise ContractError("iteration index starts at 1")
    return n ** -alpha_exponent, n ** -zeta_exponent


@dataclass(frozen=True)
class ScheduleCheck:
    """Outcome of checking a step-size pair against the two-timescale conditions."""

    alpha_sum_diverges: bool
    alpha_square_converges: bool
    zeta_sum_diverges: bool
    zeta_square_converges: bool
    ratio_vanishes: bool
    numeric: dict

    @property
    def alpha_ok(self) -> bool:
        return self.alpha_sum_diverges and self.alpha_square_converges

    @property
    def zeta_ok(self) -> bool:
        return self.zeta_sum_diverges and self.zeta_square_converges

    @property
    def ok(self) -> bool:
        return self.alpha_ok and self.zeta_ok and self.ratio_vanishes

    def violations(self) -> list[str]:
        out = []
        if not self.alpha_sum_diverges:
            out.append("sum of alpha(t) converges")
        if not self.alpha_square_converges:
            out.append("sum of alpha(t)^2 diverges")
        if not self.zeta_sum_diverges:
            out.append("sum of zeta(t) converges")
        if not self.zeta_square_converges:
            out.append("sum of zeta(t)^2 diverges")
        if not self.ratio_vanishes:
            out.append("zeta(t)/alpha(t) does not vanish")
        return out


def _decade_trend(exponent: float, terms: int) -> dict:
    """Partial sums of ``t**-exponent`` at each decade and the last two increments."""
    t = np.arange(1, terms + 1, dtype=float)
    partial = np.cumsum(t ** -exponent)
    marks = [10 ** k for k in range(1, int(round(math.log10(terms))) + 1) if 10 ** k <= terms]
    sums = [float(partial[m - 1]) for m in marks]
    inc = np.diff(sums)
    # series whose decade increments keep shrinking geometrically are summable
    shrink = float(inc[-1] / inc[-2]) if len(inc) >= 2 and inc[-2] > 0 else float("nan")
    return {"partial_sums": dict(zip(marks, sums)), "increment_ratio": shrink, "converging": shrink < 0.95}


def validate_schedule(schedule: RateSchedule, terms: int = 10**6) -> ScheduleCheck:
    """Check the step sizes for convergence of the coupled learning processes.

    Polynomial steps ``t**-p`` sum to infinity iff ``p <= 1`` and are square
    summable iff ``p > 1/2``; the strategy step must vanish relative to the
    estimate step, i.e. ``p_zeta > p_alpha``. The analytic verdict is
    returned together with numeric partial-sum trends over ``terms`` terms.
    """
    pa, pz = schedule.alpha_exponent, schedule.zeta_exponent
    numeric = {
        "alpha": _decade_trend(pa, terms),
        "alpha_sq": _decade_trend(2 * pa, terms),
        "zeta": _decade_trend(pz, terms),
        "zeta_sq": _decade_trend(2 * pz, terms),
    }
    return ScheduleCheck(
        alpha_sum_diverges=pa <= 1,
        alpha_square_converges=2 * pa > 1,
        zeta_sum_diverges=pz <= 1,
        zeta_square_converges=2 * pz > 1,
        ratio_vanishes=pz > pa,
        numeric=numeric,
    )


def select_action(strategy, rng: np.random.Generator) -> int:
    p = np.asarray(strategy, dtype=float)
    _check_simplex(p)
    # inverse-CDF draw; one uniform per call keeps streams aligned across policies
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(p) - 1)


def baseline_fixed(num_switching_points: int) -> int:
    """Switching point nearest half the frame, ties broken upward."""
    if num_switching_points < 1:
        raise ContractError("need at least one switching point")
    return int(math.floor(num_switching_points / 2 + 0.5))


def baseline_random(num_switching_points: int, rng: np.random.Generator) -> int:
    if num_switching_points < 1:
        raise ContractError("need at least one switching point")
    return int(rng.integers(1, num_switching_points + 1))


class Policy:
    """Chooses a switching point at each frame start and observes the frame cost."""

    name = "policy"

    def choose(self) -> int:
        raise NotImplementedError

    def observe(self, action: int, cost: float) -> None:
        pass

    def strategy(self) -> np.ndarray:
        raise NotImplementedError

    def estimates(self) -> np.ndarray | None:
        return None


class FixedPolicy(Policy):
    name = "fixed"

    def __init__(self, num_switching_points: int, point: int | None = None):
        self.num_switching_points = num_switching_points
        self.point = baseline_fixed(num_switching_points) if point is None else int(point)
        if not 1 <= self.point <= num_switching_points:
            raise ContractError(f"fixed switching point {self.point} outside 1..{num_switching_points}")

    def choose(self) -> int:
        return self.point

    def strategy(self) -> np.ndarray:
        p = np.zeros(self.num_switching_points)
        p[self.point - 1] = 1.0
        return p


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, num_switching_points: int, rng: np.random.Generator):
        self.num_switching_points = num_switching_points
        self.rng = rng

    def choose(self) -> int:
        return baseline_random(self.num_switching_points, self.rng)

    def strategy(self) -> np.ndarray:
        return np.full(self.num_switching_points, 1.0 / self.num_switching_points)


class GibbsLearner(Policy):
    """One SCBS running the coupled cost/strategy learning loop.

    After ``max_iterations`` updates the strategy is frozen and play
    continues by sampling it.
    """

    name = "learner"

    def __init__(
        self,
        num_switching_points: int,
        rng: np.random.Generator,
        beta: float = 200.0,
        rates: RateSchedule = RateSchedule(),
        max_iterations: int = 200,
    ):
        self.state = LearnerState.initial(num_switching_points, beta)
        self.rng = rng
        self.rates = rates
        self.max_iterations = max_iterations

    def choose(self) -> int:
        return select_action(self.state.strategy, self.rng) + 1

    def observe(self, action: int, cost: float) -> None:
        if self.state.frozen:
            return
        n = self.state.iteration + 1
        alpha, zeta = self.rates(n)
        # both updates use the estimates from before this observation
        state = update_strategy(self.state, zeta)
        state = update_cost_estimate(state, action - 1, cost, alpha)
        self.state = dataclasses.replace(state, iteration=n, frozen=n >= self.max_iterations)

    def strategy(self) -> np.ndarray:
        return self.state.strategy

    def estimates(self) -> np.ndarray:
        return self.state.cost_estimates


def make_policies(kinds: Sequence[str], num_switching_points: int, rngs, **learner_kw) -> list[Policy]:
    """Build one policy per cell from names ``learner``/``fixed``/``random``."""
    fixed_point = learner_kw.pop("fixed_point", None)
    out: list[Policy] = []
    for kind, rng in zip(kinds, rngs):
        if kind == "learner":
            out.append(GibbsLearner(num_switching_points, rng, **learner_kw))
        elif kind == "fixed":
            out.append(FixedPolicy(num_switching_points, fixed_point))
        elif kind == "random":
            out.append(RandomPolicy(num_switching_points, rng))
        else:
            raise ContractError(f"unknown policy {kind!r}")
    return out
