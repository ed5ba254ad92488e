"""Exact optimal planning values for desk-size instances.

Backward induction over the joint clipped state space gives OPT(T) exactly:
payoffs saturate outside [tau_min, tau_max], so clipping states at the
boundaries preserves every future payoff. A brute-force enumeration over
action sequences (running the unclipped dynamics) serves as an independent
cross-check; both accumulate payoffs in the same order, so agreement is
exact, not approximate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Instance, transition


class OracleBudgetError(RuntimeError):
    """The requested computation exceeds the configured evaluation budget."""

    def __init__(self, cost: int, budget: int, what: str):
        super().__init__(
            f"{what} needs ~{cost:.3g} state-action evaluations, budget is {budget:.3g}"
        )
        self.cost = cost
        self.budget = budget


def action_sets(n: int, k: int) -> list[tuple[int, ...]]:
    """All plays of at most k arms, ordered by size then lexicographically."""
    out: list[tuple[int, ...]] = []
    for size in range(min(n, k) + 1):
        out.extend(itertools.combinations(range(n), size))
    return out


@dataclass(frozen=True)
class _ClippedSpace:
    """Per-arm clipped states and transition/payoff lookup tables."""

    values: np.ndarray       # (M,) the state integers tau_min..-1, 1..tau_max
    idle_next: np.ndarray    # (M,) index after a non-play (clipped)
    play_next: np.ndarray    # (M,) index after a play (clipped)


def _clipped_space(tau_min: int, tau_max: int) -> _ClippedSpace:
    states = list(range(tau_min, 0)) + list(range(1, tau_max + 1))
    index = {tau: i for i, tau in enumerate(states)}

    def clip(tau: int) -> int:
        return max(tau_min, min(tau_max, tau))

    idle = np.array([index[clip(transition(tau, False))] for tau in states])
    play = np.array([index[clip(transition(tau, True))] for tau in states])
    return _ClippedSpace(
        values=np.array(states), idle_next=idle, play_next=play
    )


def dp_optimal(
    instance: Instance, T: int, budget: float = 1e8
) -> tuple[float, list[frozenset[int]]]:
    """OPT(T) and one optimal play schedule, by exact backward induction."""
    n, k = instance.n, instance.k
    space = _clipped_space(instance.tau_min, instance.tau_max)
    M = len(space.values)
    J = M**n
    actions = action_sets(n, k)
    cost = J * T * len(actions)
    if cost > budget:
        raise OracleBudgetError(cost, int(budget), "dp_optimal")

    digits = [(np.arange(J) // M**i) % M for i in range(n)]
    payoff_per_arm = [
        np.array([instance.payoff(i, int(tau)) for tau in space.values])
        for i in range(n)
    ]

    rewards = []
    nexts = []
    for act in actions:
        r = np.zeros(J)
        nxt = np.zeros(J, dtype=np.int64)
        for i in range(n):
            if i in act:
                r = r + payoff_per_arm[i][digits[i]]
                nxt += space.play_next[digits[i]] * M**i
            else:
                nxt += space.idle_next[digits[i]] * M**i
        rewards.append(r)
        nexts.append(nxt)

    value = np.zeros(J)
    policy = np.zeros((T, J), dtype=np.int32)
    for t in range(T - 1, -1, -1):
        stacked = np.stack([rewards[a] + value[nexts[a]] for a in range(len(actions))])
        policy[t] = stacked.argmax(axis=0)
        value = stacked.max(axis=0)

    one_index = list(space.values).index(1)
    s = sum(one_index * M**i for i in range(n))
    schedule = []
    for t in range(T):
        a = int(policy[t, s])
        schedule.append(frozenset(actions[a]))
        s = int(nexts[a][s])
    return float(value[sum(one_index * M**i for i in range(n))]), schedule


def exhaustive_optimal(instance: Instance, T: int, budget: float = 1e7) -> float:
    """OPT(T) by enumerating every action sequence on the raw dynamics."""
    n, k = instance.n, instance.k
    actions = action_sets(n, k)
    cost = len(actions) ** T
    if cost > budget:
        raise OracleBudgetError(cost, int(budget), "exhaustive_optimal")
    action_members = [frozenset(a) for a in actions]

    def best(states: tuple[int, ...], t: int) -> float:
        if t == T:
            return 0.0
        top = -np.inf
        for act, members in zip(actions, action_members):
            r = 0.0
            for i in act:
                r = r + instance.payoff(i, states[i])
            nxt = tuple(
                transition(tau, i in members) for i, tau in enumerate(states)
            )
            v = r + best(nxt, t + 1)
            if v > top:
                top = v
        return top

    return float(best((1,) * n, 0))


def schedule_payoff(instance: Instance, schedule: list[frozenset[int]]) -> float:
    """Total mean payoff of running a fixed play schedule from all-ones."""
    states = (1,) * instance.n
    total = 0.0
    for played in schedule:
        r = 0.0
        for i in sorted(played):
            r = r + instance.payoff(i, states[i])
        total = total + r
        states = tuple(
            transition(tau, i in played) for i, tau in enumerate(states)
        )
    return total
