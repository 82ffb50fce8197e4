"""Shared generators and independent oracles for the test suite.

The oracles here deliberately avoid the library's solver paths: forward
recursion is reimplemented locally, and every oracle LP goes through
scipy's HiGHS interface rather than the embedded engine.
"""

import itertools

import numpy as np
from scipy.optimize import linprog

from modcmdp import (
    AffineReward,
    CmdpInstance,
    LayeredStateSpace,
    QualityConstraint,
    WeightedL1Reward,
    box_polytope,
)


def forward_masses(instance, actions):
    """Visit masses for one deterministic action assignment, by a local
    forward recursion (independent of modcmdp.evaluate)."""
    space = instance.states
    masses = {}
    cur = np.asarray(instance.alpha, dtype=float)
    for t, layer in enumerate(space.layers):
        for i, s in enumerate(layer):
            masses[s] = float(cur[i])
        if t == space.horizon - 1:
            break
        nxt = np.zeros(len(space.layers[t + 1]))
        for i, s in enumerate(layer):
            nxt += cur[i] * np.asarray(actions[s], dtype=float)
        cur = nxt
    return masses


def policy_return(instance, actions, masses=None):
    masses = masses or forward_masses(instance, actions)
    return sum(
        masses[s] * instance.rewards[s].value(actions[s])
        for s in instance.states.nonterminal()
    )


def brute_force_mixture_value(instance, vertex_sets):
    """CMDP optimum over mixtures of deterministic vertex policies.

    Enumerates every deterministic assignment of a vertex to each state,
    evaluates return and constraint masses by forward recursion, then
    maximizes the mixture return subject to the caps with scipy. Only for
    tiny instances (the assignment count is a product over states).
    """
    states = list(instance.states.nonterminal())
    choices = [range(vertex_sets[s].shape[0]) for s in states]
    rets, masses = [], []
    for combo in itertools.product(*choices):
        actions = {s: vertex_sets[s][i] for s, i in zip(states, combo)}
        m = forward_masses(instance, actions)
        rets.append(policy_return(instance, actions, m))
        masses.append(
            [sum(m[s] for s in qc.states) for qc in instance.constraints]
        )
    rets = np.array(rets)
    masses = np.array(masses)
    n = rets.size
    a_ub = masses.T if instance.constraints else None
    b_ub = [qc.bound for qc in instance.constraints] or None
    res = linprog(
        -rets,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=[(0, None)] * n,
        method="highs",
    )
    if res.status == 2:
        return None
    assert res.status == 0, res.message
    return -res.fun


def backward_induction_value(instance):
    """Unconstrained optimum for affine rewards: per-state maximization of
    e.a + f + a.V over the polytope via scipy, composed backward."""
    space = instance.states
    values = np.zeros(len(space.layers[-1]))
    for t in range(space.horizon - 2, -1, -1):
        layer = space.layers[t]
        new_vals = np.zeros(len(layer))
        for i, s in enumerate(layer):
            poly = instance.polytopes[s]
            rew = instance.rewards[s]
            c = rew.e + values
            res = linprog(
                -c,
                A_ub=poly.H if poly.H.shape[0] else None,
                b_ub=poly.h if poly.H.shape[0] else None,
                A_eq=np.ones((1, poly.dim)),
                b_eq=[1.0],
                bounds=[(0, None)] * poly.dim,
                method="highs",
            )
            assert res.status == 0
            new_vals[i] = -res.fun + rew.f
        values = new_vals
    return float(instance.alpha @ values)


def random_instance(
    rng,
    max_states=4,
    max_horizon=4,
    reward="affine",
    eps_range=(0.08, 0.5),
    constraint_chance=0.8,
):
    """Random layered instance with box polytopes and feasible caps."""
    T = int(rng.integers(2, max_horizon + 1))
    sizes = [int(rng.integers(1, max_states + 1)) for _ in range(T)]
    layers = [[f"s{t}_{i}" for i in range(sizes[t])] for t in range(T)]
    space = LayeredStateSpace(layers)
    polytopes, rewards = {}, {}
    for t in range(T - 1):
        for s in layers[t]:
            dim = sizes[t + 1]
            b = rng.dirichlet(np.ones(dim) * rng.uniform(0.5, 3.0))
            polytopes[s] = box_polytope(b, float(rng.uniform(*eps_range)))
            if reward == "affine":
                rewards[s] = AffineReward(
                    rng.normal(size=dim), float(rng.normal())
                )
            elif reward == "l1":
                rewards[s] = WeightedL1Reward(b, rng.uniform(0.2, 2.0, size=dim))
            else:
                raise ValueError(reward)
    alpha = rng.dirichlet(np.ones(sizes[0]))
    instance = CmdpInstance(space, polytopes, rewards, alpha, [])

    constraints = []
    if rng.random() < constraint_chance:
        base_masses = forward_masses(
            instance, {s: polytopes[s].base for s in space.nonterminal()}
        )
        for _ in range(int(rng.integers(1, 3))):
            later = [s for t in range(1, T) for s in layers[t]]
            k = int(rng.integers(1, min(3, len(later)) + 1))
            members = list(rng.choice(later, size=k, replace=False))
            mass = sum(base_masses[s] for s in members)
            bound = mass * float(rng.uniform(0.8, 1.4)) + 1e-3
            constraints.append(QualityConstraint(members, bound))
    return CmdpInstance(space, polytopes, rewards, alpha, constraints)
