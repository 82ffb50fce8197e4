"""Independent policy evaluation: exact forward recursion and Monte Carlo
simulation.

Both evaluators accept deterministic and randomized policies. For a
randomized policy the transition row is the mixture marginal while the
reward is the mixture average of the atom rewards — the distinction is
what makes randomizing among extreme actions profitable for non-concave
rewards, so the two must never be conflated.

Simulation uses numpy's Philox counter-based generator; a fixed 64-bit
seed reproduces reports bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    CmdpInstance,
    DeterministicPolicy,
    Policy,
    RandomizedPolicy,
    validate,
)


@dataclass(frozen=True)
class EvaluationReport:
    """Visitation masses, return, and per-constraint attainment of one
    policy. ``std_error`` and ``trajectories`` are set by simulation only.
    """

    visit_mass: dict[str, float]
    value: float
    constraint_masses: np.ndarray
    constraint_slacks: np.ndarray
    feasible: bool
    std_error: Optional[float] = None
    trajectories: Optional[int] = None


def _require_valid(instance: CmdpInstance, policy: Policy) -> None:
    bad = validate(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(bad))
    bad = policy.check(instance)
    if bad:
        raise ValueError("infeasible policy: " + "; ".join(bad))


def _constraint_summary(instance, visit):
    masses = np.array(
        [sum(visit.get(s, 0.0) for s in qc.states) for qc in instance.constraints]
    )
    bounds = np.array([qc.bound for qc in instance.constraints])
    slacks = bounds - masses
    feasible = bool(np.all(masses <= bounds + 1e-8)) if masses.size else True
    return masses, slacks, feasible


def evaluate_exact(instance: CmdpInstance, policy: Policy) -> EvaluationReport:
    """Exact visit masses by forward recursion and the exact return."""
    _require_valid(instance, policy)
    space = instance.states
    visit: dict[str, float] = {}
    cur = np.asarray(instance.alpha, dtype=float).copy()
    total = 0.0
    for t, layer in enumerate(space.layers):
        for i, s in enumerate(layer):
            visit[s] = float(cur[i])
        if t == space.horizon - 1:
            break
        nxt = space.layers[t + 1]
        out = np.zeros(len(nxt))
        for i, s in enumerate(layer):
            if cur[i] == 0.0:
                continue
            total += cur[i] * policy.expected_reward(s, instance.rewards[s])
            out += cur[i] * policy.action_marginal(s)
        cur = out
    masses, slacks, feasible = _constraint_summary(instance, visit)
    return EvaluationReport(visit, float(total), masses, slacks, feasible)


def simulate(
    instance: CmdpInstance,
    policy: Policy,
    trajectories: int,
    seed: int = 0,
) -> EvaluationReport:
    """Monte Carlo estimate of visit masses and return from independent
    trajectories (Philox stream derived from ``seed``). Empirical values
    converge to the exact ones at the usual 1/sqrt(N) rate; the report's
    feasibility flag applies the caps to the empirical masses.
    """
    if trajectories < 1:
        raise ValueError("trajectories must be >= 1")
    _require_valid(instance, policy)
    rng = np.random.Generator(np.random.Philox(seed))
    space = instance.states
    n = trajectories

    cum_alpha = np.cumsum(instance.alpha)
    cur = np.searchsorted(cum_alpha, rng.random(n), side="right")
    cur = np.minimum(cur, len(space.layers[0]) - 1)
    rewards = np.zeros(n)
    visit: dict[str, float] = {}

    for t, layer in enumerate(space.layers):
        counts = np.bincount(cur, minlength=len(layer))
        for i, s in enumerate(layer):
            visit[s] = counts[i] / n
        if t == space.horizon - 1:
            break
        nxt_count = len(space.layers[t + 1])
        nxt = np.zeros(n, dtype=np.int64)
        for i, s in enumerate(layer):
            mask = cur == i
            k = int(mask.sum())
            if k == 0:
                continue
            rew = instance.rewards[s]
            if isinstance(policy, DeterministicPolicy):
                a = policy.actions[s]
                rewards[mask] += rew.value(a)
                draws = rng.random(k)
                nxt[mask] = np.minimum(
                    np.searchsorted(np.cumsum(a), draws, side="right"),
                    nxt_count - 1,
                )
            else:
                pairs = policy.mixtures[s]
                lam = np.array([w for w, _ in pairs])
                atom = np.searchsorted(np.cumsum(lam), rng.random(k), side="right")
                atom = np.minimum(atom, len(pairs) - 1)
                idx = np.flatnonzero(mask)
                dest = np.empty(k, dtype=np.int64)
                for ai, (_, a) in enumerate(pairs):
                    sub = atom == ai
                    m = int(sub.sum())
                    if m == 0:
                        continue
                    rewards[idx[sub]] += rew.value(a)
                    dest[sub] = np.minimum(
                        np.searchsorted(np.cumsum(a), rng.random(m), side="right"),
                        nxt_count - 1,
                    )
                nxt[mask] = dest
        cur = nxt

    value = float(rewards.mean())
    se = float(rewards.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    masses, slacks, feasible = _constraint_summary(instance, visit)
    return EvaluationReport(
        visit, value, masses, slacks, feasible, std_error=se, trajectories=n
    )
