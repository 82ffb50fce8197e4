"""Concave-envelope method for convex rewards.

Over a polytope, the tightest concave function dominating a convex reward
is piecewise linear and generated by the reward's values at the polytope
vertices; its value at any point is the best convex combination of vertex
values reproducing that point. Solving the lifted occupancy program with
the envelope reward is an LP over per-vertex masses, and the optimal
envelope value is actually achieved in the original problem by
randomizing among the vertices with the combination weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp as lpmod
from .evaluate import evaluate_exact
from .model import (
    AffineReward,
    CmdpInstance,
    DeterministicPolicy,
    QuadraticDeviationReward,
    RandomizedPolicy,
    RewardSpec,
    validate,
)
from .occupancy import extract_policy, solve_occupancy
from .vertices import (
    DecompositionError,
    VertexSet,
    build_finite_cmdp,
    enumerate_for_instance,
    solve_finite,
)


@dataclass(frozen=True)
class EnvelopeModel:
    """Envelope generators per state: the polytope vertices and the source
    reward's value at each (the extreme points of the reward's hypograph
    restricted to vertex abscissae — exact for convex rewards)."""

    vertices: dict[str, np.ndarray]
    vertex_rewards: dict[str, np.ndarray]
    source: dict[str, RewardSpec]


def _check_envelope_rewards(instance: CmdpInstance) -> None:
    for s in instance.states.nonterminal():
        rew = instance.rewards[s]
        if isinstance(rew, AffineReward):
            continue
        if isinstance(rew, QuadraticDeviationReward) and rew.convex:
            continue
        raise ValueError(
            f"reward at {s!r} is not convex; the envelope solver handles "
            "convex quadratic (or affine) rewards — use the occupancy "
            "solver for concave rewards"
        )


def build_envelope(
    instance: CmdpInstance,
    vertex_set: VertexSet | None = None,
    method: str = "auto",
) -> EnvelopeModel:
    """Enumerate generators and tabulate vertex rewards for an instance
    with convex (quadratic or affine) rewards."""
    bad = validate(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(bad))
    _check_envelope_rewards(instance)
    if vertex_set is None:
        vertex_set = enumerate_for_instance(instance, method=method)
    rewards = {
        s: np.array([instance.rewards[s].value(v) for v in vertex_set.vertices[s]])
        for s in instance.states.nonterminal()
    }
    return EnvelopeModel(
        dict(vertex_set.vertices), rewards, dict(instance.rewards)
    )


def hull_envelope(points, values, query) -> tuple[float, np.ndarray]:
    """Envelope of arbitrary generators: the largest convex combination of
    ``values`` whose combination of ``points`` equals ``query``. Returns
    (value, weight vector); raises DecompositionError outside the hull.
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    q = np.asarray(query, dtype=float)
    nv = pts.shape[0]
    a_eq = np.vstack([pts.T, np.ones((1, nv))])
    b_eq = np.concatenate([q, [1.0]])
    problem = lpmod.LpProblem(c=vals, a_eq=a_eq, b_eq=b_eq)
    sol = lpmod.solve_lp(problem, backend="dense")
    if sol.status != "optimal":
        raise DecompositionError("query point is outside the generator hull")
    lam = np.clip(sol.x, 0.0, None)
    return float(sol.objective), lam


def envelope_value(
    model: EnvelopeModel, state: str, a
) -> tuple[float, np.ndarray]:
    """Envelope value and maximizing weights at one action. The value is
    never below the source reward; equality holds at the vertices."""
    try:
        return hull_envelope(model.vertices[state], model.vertex_rewards[state], a)
    except DecompositionError:
        raise DecompositionError(
            f"action at {state!r} is outside the vertex hull — "
            "vertex enumeration is incomplete"
        )


def solve_with_envelope(
    instance: CmdpInstance,
    backend: str = "auto",
    method: str = "auto",
    time_limit=None,
) -> tuple[float, RandomizedPolicy]:
    """Solve a convex-reward instance to optimality.

    Builds the per-vertex occupancy LP (mass w(s, i) on each generator
    with the vertex reward as its objective coefficient — the finite
    embedding of the piecewise-linear envelope) and returns the optimal
    value together with the randomized vertex policy w(s, i) / d(s),
    which achieves that value in the original problem.
    """
    bad = validate(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(bad))
    _check_envelope_rewards(instance)
    vertex_set = enumerate_for_instance(instance, method=method)
    fc = build_finite_cmdp(instance, vertex_set)
    return solve_finite(fc, backend=backend, time_limit=time_limit)


def naive_linear_baseline(
    instance: CmdpInstance, backend: str = "auto"
) -> tuple[float, DeterministicPolicy]:
    """First-order baseline: replace each reward by its tangent plane at
    the base action, solve the resulting LP, and score the policy under
    the true rewards.

    Ties in the linearized program are broken toward the base policy
    (when it is feasible), matching the natural behaviour of a local
    approximation anchored at the expansion point. Returns the true
    return and the chosen policy.
    """
    bad = validate(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(bad))
    lin_rewards = {}
    for s in instance.states.nonterminal():
        rew = instance.rewards[s]
        b = instance.polytopes[s].base
        if isinstance(rew, AffineReward):
            lin_rewards[s] = rew
        elif isinstance(rew, QuadraticDeviationReward):
            sign = 1.0 if rew.convex else -1.0
            grad = 2.0 * sign * rew.weights * (b - rew.center)
            offset = rew.value(b) - float(grad @ b)
            lin_rewards[s] = AffineReward(grad, offset)
        else:
            raise ValueError(
                f"reward at {s!r} is not quadratic or affine; the linear "
                "baseline is defined for those families"
            )
    lin_instance = CmdpInstance(
        instance.states,
        instance.polytopes,
        lin_rewards,
        instance.alpha,
        instance.constraints,
    )
    sol = solve_occupancy(lin_instance, backend=backend)
    policy = extract_policy(sol, lin_instance)

    base_policy = DeterministicPolicy(
        {s: instance.polytopes[s].base for s in instance.states.nonterminal()}
    )
    base_lin = evaluate_exact(lin_instance, base_policy)
    if base_lin.feasible and base_lin.value >= sol.objective - 1e-9 * max(
        1.0, abs(sol.objective)
    ):
        policy = base_policy
    true_report = evaluate_exact(instance, policy)
    return true_report.value, policy
