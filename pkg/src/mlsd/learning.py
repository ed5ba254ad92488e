"""Explore-then-Commit adaptation for unknown payoff tables.

Exploration visits every (arm, state) pair in the relaxation's domain at
least m times using a deterministic schedule, estimates the means, then
commits to the planner run on the estimates for the remaining rounds. The
number of samples m and the precision eta follow the Hoeffding-based tuning
with confidence 1 - 1/T.

The horizon T is assumed known; an anytime variant via a doubling schedule
of restarts would wrap etc_run unchanged and is left as an extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import build_lp, solve_lp, tau_L_from_epsilon
from .model import Instance, transition
from .planner import draw_offsets, round_intervals, run_planner
from .rng import stream


class LearningError(RuntimeError):
    pass


class ExplorationTooLongError(LearningError):
    """The horizon cannot fit the exploration phase."""

    def __init__(self, T: int, exploration_length: int):
        self.min_viable_T = exploration_length + 1
        super().__init__(
            f"T={T} is too small: exploration needs {exploration_length} rounds, "
            f"minimum viable T is {self.min_viable_T}"
        )


@dataclass(frozen=True)
class EtcConfig:
    epsilon: float
    T: int
    tau_L: int
    eta: float
    delta: float
    m: int


def etc_config(instance: Instance, T: int, epsilon: float) -> EtcConfig:
    """Horizon-tuned parameters: eta balances exploration cost against the
    per-round estimation loss; delta = 1/T; m from Hoeffding + union bound."""
    tau_L = tau_L_from_epsilon(epsilon)
    n, k, tau_max = instance.n, instance.k, instance.tau_max
    span = tau_max - tau_L
    eta = ((n * (tau_max**2 - tau_L + 2) * math.log(2 * n * span * T)) / (2 * k * T)) ** (1.0 / 3.0)
    delta = 1.0 / T
    m = math.ceil(math.log(2 * n * span / delta) / (2 * eta**2))
    return EtcConfig(epsilon=epsilon, T=T, tau_L=tau_L, eta=eta, delta=delta, m=m)


def required_states(tau_max: int, tau_L: int) -> list[int]:
    """States whose payoffs the relaxation consults: tau_L..-1 and 1..tau_max."""
    return list(range(tau_L, 0)) + list(range(1, tau_max + 1))


def exploration_schedule(
    n: int, k: int, tau_max: int, tau_L: int, m: int
) -> list[frozenset[int]]:
    """Deterministic schedule collecting >= m samples per required pair.

    Arms are grouped into ceil(n/k) cohorts that always act in lockstep, so
    at most k arms play per round. Each cohort first walks the positive
    states: one play at a saturated state (a tau_max sample), then exact-gap
    plays for tau_max and each state down to 2, then a single gap-2 play at
    state 1. Negative states come from "dive waves": m consecutive blocks of
    (rest, play, -tau_L more plays); from the second block of a run onward
    the block's lead play happens at state 1, which supplies the remaining
    state-1 samples. Total length is at most
    ceil(n/k) * m * (tau_max**2 - tau_L + 2).
    """
    if m < 1:
        raise LearningError(f"m must be >= 1, got {m}")
    if tau_L > -1:
        raise LearningError(f"tau_L must be <= -1, got {tau_L}")
    depth = -tau_L
    cohorts = [list(range(c, min(c + k, n))) for c in range(0, n, k)]
    plays: dict[int, frozenset[int]] = {}

    t = 0
    if tau_max >= 2:
        for ci, cohort in enumerate(cohorts):
            group = frozenset(cohort)
            t_play = max(t + 1, tau_max)
            plays[t_play] = group
            for _ in range(m - 1):
                t_play += tau_max + 1
                plays[t_play] = group
            for j in range(tau_max - 1, 1, -1):
                for _ in range(m):
                    t_play += j + 1
                    plays[t_play] = group
            t_play += 2
            plays[t_play] = group
            t = t_play
    for cohort in cohorts:
        group = frozenset(cohort)
        for _ in range(m):
            t += 1  # rest round between dives
            for _ in range(depth + 1):
                t += 1
                plays[t] = group
    return [plays.get(r, frozenset()) for r in range(1, t + 1)]


def schedule_length_bound(n: int, k: int, tau_max: int, tau_L: int, m: int) -> int:
    """Guaranteed ceiling on the schedule length (exact n/k when k | n)."""
    return math.ceil(n / k) * m * (tau_max**2 - tau_L + 2)


@dataclass
class TableModel:
    """Payoff lookup over a clipped state range; no monotonicity required.

    Quacks like an Instance for LP construction and planner selection, which
    is how estimated or perturbed tables are kept separate from true ones.
    """

    k: int
    tau_lo: int
    tau_max: int
    means: np.ndarray  # (n, tau_max - tau_lo) in table order

    @property
    def n(self) -> int:
        return self.means.shape[0]

    def _col(self, tau: int) -> int:
        tau = max(self.tau_lo, min(self.tau_max, tau))
        if tau < 0:
            return tau - self.tau_lo
        return -self.tau_lo + tau - 1

    def payoff(self, arm: int, tau: int) -> float:
        return float(self.means[arm, self._col(tau)])


@dataclass
class PayoffEstimates(TableModel):
    counts: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=int))

    @property
    def min_count(self) -> int:
        return int(self.counts.min()) if self.counts.size else 0


@dataclass
class ExplorationResult:
    counts: np.ndarray       # (n, width) samples per required state
    sums: np.ndarray         # realized payoff totals per required state
    realized_total: float
    mean_total: float
    end_states: tuple[int, ...]
    length: int


def simulate_exploration(
    instance: Instance,
    schedule: list[frozenset[int]],
    tau_L: int,
    noise_rng: np.random.Generator,
) -> ExplorationResult:
    """Run the schedule on the true dynamics, recording every sample where it
    lands (positive states above tau_max count as tau_max by saturation)."""
    n = instance.n
    width = instance.tau_max - tau_L
    counts = np.zeros((n, width), dtype=np.int64)
    sums = np.zeros((n, width))
    states = [1] * n
    realized_total = 0.0
    mean_total = 0.0
    for played in schedule:
        for i in sorted(played):
            tau = states[i]
            p = instance.payoff(i, tau)
            hit = 1.0 if noise_rng.random() < p else 0.0
            realized_total += hit
            mean_total += p
            key = min(tau, instance.tau_max) if tau > 0 else tau
            if key >= tau_L:
                col = key - tau_L if key < 0 else -tau_L + key - 1
                counts[i, col] += 1
                sums[i, col] += hit
        states = [transition(tau, i in played) for i, tau in enumerate(states)]
    return ExplorationResult(
        counts=counts,
        sums=sums,
        realized_total=realized_total,
        mean_total=mean_total,
        end_states=tuple(states),
        length=len(schedule),
    )


def estimate_payoffs(
    instance_k: int, tau_max: int, tau_L: int, counts: np.ndarray, sums: np.ndarray
) -> PayoffEstimates:
    """Empirical means per (arm, state). Every required pair must have at
    least one sample; the schedule guarantees m of them."""
    if np.any(counts == 0):
        missing = np.argwhere(counts == 0)
        arm, col = missing[0]
        tau = col + tau_L if col < -tau_L else col + tau_L + 1
        raise LearningError(
            f"no samples for arm {arm} at state {tau} ({len(missing)} pairs missing)"
        )
    means = sums / counts
    return PayoffEstimates(
        k=instance_k, tau_lo=tau_L, tau_max=tau_max, means=means, counts=counts
    )


@dataclass
class EtcResult:
    T: int
    config: EtcConfig
    exploration_length: int
    realized_total: float      # R(T): payoff actually collected
    mean_total: float          # same trajectory scored by true means
    planner_total: float       # full-information planner on the same streams
    regret_vs_planner: float   # planner_total - realized_total
    benchmark_total: Optional[float] = None
    regret: Optional[float] = None  # benchmark_total - realized_total
    min_sample_count: int = 0


def etc_run(
    instance: Instance,
    T: int,
    epsilon: float,
    seed: int,
    benchmark_total: Optional[float] = None,
) -> EtcResult:
    """Explore, estimate, and commit; also runs the full-information planner
    on the same random streams as a paired reference.

    ``benchmark_total`` is the scaled optimum (1-eps) * gamma_k * OPT(T) when
    the caller has it; the recorded regret is benchmark - R(T).
    """
    cfg = etc_config(instance, T, epsilon)
    schedule = exploration_schedule(
        instance.n, instance.k, instance.tau_max, cfg.tau_L, cfg.m
    )
    if len(schedule) >= T:
        raise ExplorationTooLongError(T, len(schedule))

    noise = stream(seed, "noise")
    expl = simulate_exploration(instance, schedule, cfg.tau_L, noise)
    estimates = estimate_payoffs(
        instance.k, instance.tau_max, cfg.tau_L, expl.counts, expl.sums
    )

    solution = solve_lp(build_lp(estimates, cfg.tau_L))
    intervals = round_intervals(solution, stream(seed, "rounding"))
    offsets = draw_offsets(intervals, stream(seed, "offsets"))
    commit = run_planner(
        instance,
        intervals,
        offsets,
        T - len(schedule),
        selection=estimates,
        init_states=expl.end_states,
        noise_rng=noise,
    )
    realized_total = expl.realized_total + float(commit.realized.sum())
    mean_total = expl.mean_total + float(commit.actual_payoff.sum())

    full_info = solve_lp(build_lp(instance, cfg.tau_L))
    fi_intervals = round_intervals(full_info, stream(seed, "rounding"))
    fi_offsets = draw_offsets(fi_intervals, stream(seed, "offsets"))
    fi_trace = run_planner(instance, fi_intervals, fi_offsets, T)
    planner_total = float(fi_trace.actual_payoff.sum())

    regret = None if benchmark_total is None else benchmark_total - realized_total
    return EtcResult(
        T=T,
        config=cfg,
        exploration_length=len(schedule),
        realized_total=realized_total,
        mean_total=mean_total,
        planner_total=planner_total,
        regret_vs_planner=planner_total - realized_total,
        benchmark_total=benchmark_total,
        regret=regret,
        min_sample_count=estimates.min_count,
    )


@dataclass
class RobustnessReport:
    etas: list[float]
    deficits: list[float]      # mean per-round payoff lost to perturbation
    standard_errors: list[float]
    fitted_slope: float        # deficit ~ fitted_slope * (eta * k)
    k: int

    def predicted(self, eta: float) -> float:
        return self.fitted_slope * eta * self.k


def robustness_gap(
    instance: Instance,
    etas: list[float],
    T: int,
    n_seeds: int,
    epsilon: float,
    seed: int,
) -> RobustnessReport:
    """Per-round payoff deficit of the planner run on eta-perturbed tables.

    Each seed fixes a Rademacher sign pattern; the same pattern is scaled by
    every eta (common random numbers), the planner re-plans on the perturbed
    tables, and the deficit against the matched unperturbed run is averaged.
    Perturbations may break monotonicity; feasibility is unaffected.
    """
    tau_L = tau_L_from_epsilon(epsilon)
    truth = instance.payoff_matrix()
    true_solution = solve_lp(build_lp(instance, tau_L))

    per_eta: list[np.ndarray] = [np.zeros(n_seeds) for _ in etas]
    for s in range(n_seeds):
        run_seed = seed + s
        signs = np.where(
            stream(run_seed, "perturb").random(truth.shape) < 0.5, -1.0, 1.0
        )
        base_intervals = round_intervals(true_solution, stream(run_seed, "rounding"))
        base_offsets = draw_offsets(base_intervals, stream(run_seed, "offsets"))
        base = run_planner(instance, base_intervals, base_offsets, T)
        base_rate = float(base.actual_payoff.mean())
        for j, eta in enumerate(etas):
            tables = TableModel(
                k=instance.k,
                tau_lo=instance.tau_min,
                tau_max=instance.tau_max,
                means=np.clip(truth + eta * signs, 0.0, 1.0),
            )
            sol = solve_lp(build_lp(tables, tau_L))
            intervals = round_intervals(sol, stream(run_seed, "rounding"))
            offsets = draw_offsets(intervals, stream(run_seed, "offsets"))
            trace = run_planner(
                instance, intervals, offsets, T, selection=tables
            )
            per_eta[j][s] = base_rate - float(trace.actual_payoff.mean())

    deficits = [float(v.mean()) for v in per_eta]
    ses = [float(v.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0 for v in per_eta]
    xs = np.array([eta * instance.k for eta in etas])
    ys = np.array(deficits)
    denom = float((xs**2).sum())
    slope = float((xs * ys).sum() / denom) if denom > 0 else 0.0
    return RobustnessReport(
        etas=list(etas),
        deficits=deficits,
        standard_errors=ses,
        fitted_slope=slope,
        k=instance.k,
    )
