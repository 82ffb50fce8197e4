"""Problem model for finite-horizon constrained MDPs whose actions pick the
transition distribution itself from a per-state polytope around a base
distribution.

States live in layers, one layer per period; an action at a nonterminal
state is a probability vector over the next layer, constrained to a
polytope ``{a in simplex : H a <= h}`` that must contain the base vector.
Rewards depend on the chosen distribution only, and solution quality is
bounded through caps on expected visitation mass of selected state sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

# Feasibility tolerance for membership checks (actions, policies).
FEAS_TOL = 1e-8
# Normalization tolerance for probability vectors.
NORM_TOL = 1e-9


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LayeredStateSpace:
    """Time-indexed state space: ``layers[t]`` holds the state names of
    period ``t`` (0-based internally; periods run 0..horizon-1).

    State names are globally unique; terminal states are exactly the last
    layer.
    """

    layers: tuple[tuple[str, ...], ...]
    _index: dict[str, tuple[int, int]] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __init__(self, layers: Sequence[Sequence[str]]):
        lay = tuple(tuple(str(s) for s in layer) for layer in layers)
        if len(lay) < 2:
            raise ValueError("state space needs at least 2 layers")
        if any(len(layer) == 0 for layer in lay):
            raise ValueError("every layer must be nonempty")
        index: dict[str, tuple[int, int]] = {}
        for t, layer in enumerate(lay):
            for i, name in enumerate(layer):
                if name in index:
                    raise ValueError(f"duplicate state name {name!r}")
                index[name] = (t, i)
        object.__setattr__(self, "layers", lay)
        object.__setattr__(self, "_index", index)

    @property
    def horizon(self) -> int:
        return len(self.layers)

    def layer_of(self, state: str) -> int:
        return self._index[state][0]

    def position(self, state: str) -> tuple[int, int]:
        """(layer, index-within-layer) of a state name."""
        return self._index[state]

    def __contains__(self, state: str) -> bool:
        return state in self._index

    def nonterminal(self) -> Iterable[str]:
        for layer in self.layers[:-1]:
            yield from layer

    def all_states(self) -> Iterable[str]:
        for layer in self.layers:
            yield from layer


@dataclass(frozen=True)
class ActionPolytope:
    """Feasible transition vectors ``{a in simplex : H a <= h}`` around a
    base distribution ``base`` over the next layer.

    ``H`` may have zero rows, in which case the feasible set is the whole
    simplex.
    """

    base: np.ndarray
    H: np.ndarray
    h: np.ndarray

    def __init__(self, base, H=None, h=None):
        base = _readonly(base)
        if base.ndim != 1 or base.size == 0:
            raise ValueError("base must be a nonempty vector")
        n = base.size
        H = np.zeros((0, n)) if H is None else np.asarray(H, dtype=float)
        h = np.zeros(0) if h is None else np.asarray(h, dtype=float)
        H = H.reshape(-1, n) if H.size else np.zeros((0, n))
        if H.shape[0] != h.size:
            raise ValueError("H and h row counts differ")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "H", _readonly(H))
        object.__setattr__(self, "h", _readonly(h))

    @property
    def dim(self) -> int:
        return self.base.size

    def contains(self, a, tol: float = FEAS_TOL) -> bool:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dim,):
            return False
        if a.min(initial=0.0) < -tol or abs(a.sum() - 1.0) > tol:
            return False
        return self.margin(a) <= tol

    def margin(self, a) -> float:
        """Largest violation of the H-rows at ``a`` (<= 0 means inside)."""
        if self.H.shape[0] == 0:
            return 0.0
        return float(np.max(self.H @ np.asarray(a, dtype=float) - self.h))


def box_polytope(base, epsilon: float) -> ActionPolytope:
    """Polytope of distributions within ``epsilon`` of ``base`` in each
    coordinate, lower bounds clipped at 0.

    With ``epsilon >= 1`` the feasible set equals the whole simplex.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    base = np.asarray(base, dtype=float)
    if base.min(initial=0.0) < -NORM_TOL or abs(base.sum() - 1.0) > NORM_TOL:
        raise ValueError("base must be a probability vector")
    n = base.size
    eye = np.eye(n)
    H = np.vstack([eye, -eye])
    h = np.concatenate([base + epsilon, -np.clip(base - epsilon, 0.0, None)])
    return ActionPolytope(base, H, h)


@dataclass(frozen=True)
class AffineReward:
    """r(a) = e . a + f."""

    e: np.ndarray
    f: float

    def __init__(self, e, f: float = 0.0):
        object.__setattr__(self, "e", _readonly(e))
        object.__setattr__(self, "f", float(f))

    @property
    def dim(self) -> int:
        return self.e.size

    def value(self, a) -> float:
        return float(self.e @ np.asarray(a, dtype=float) + self.f)


@dataclass(frozen=True)
class WeightedL1Reward:
    """r(a) = -sum_k weights[k] * |a[k] - center[k]| (concave, <= 0)."""

    center: np.ndarray
    weights: np.ndarray

    def __init__(self, center, weights=None):
        center = _readonly(center)
        w = np.ones(center.size) if weights is None else np.asarray(weights, float)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def dim(self) -> int:
        return self.center.size

    def value(self, a) -> float:
        dev = np.asarray(a, dtype=float) - self.center
        return float(-(self.weights @ np.abs(dev)))


@dataclass(frozen=True)
class QuadraticDeviationReward:
    """r(a) = sign * sum_k weights[k] * (a[k] - center[k])^2 with sign -1
    (concave) or +1 (convex). Weights default to all ones, which gives the
    plain squared Euclidean deviation.
    """

    center: np.ndarray
    convex: bool
    weights: np.ndarray

    def __init__(self, center, convex: bool = False, weights=None):
        center = _readonly(center)
        w = np.ones(center.size) if weights is None else np.asarray(weights, float)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "convex", bool(convex))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def dim(self) -> int:
        return self.center.size

    def value(self, a) -> float:
        dev = np.asarray(a, dtype=float) - self.center
        q = float(self.weights @ (dev * dev))
        return q if self.convex else -q


RewardSpec = Union[AffineReward, WeightedL1Reward, QuadraticDeviationReward]


def reward_values(spec: RewardSpec, actions: np.ndarray) -> np.ndarray:
    """Rewards of a whole batch of actions (one per row) at once."""
    actions = np.asarray(actions, dtype=float)
    if isinstance(spec, AffineReward):
        return actions @ spec.e + spec.f
    if isinstance(spec, WeightedL1Reward):
        return -(np.abs(actions - spec.center) @ spec.weights)
    dev = actions - spec.center
    q = (dev * dev) @ spec.weights
    return q if spec.convex else -q


@dataclass(frozen=True)
class QualityConstraint:
    """Cap on total expected visitation mass of a state set (may span
    layers): sum of visit probabilities over ``states`` <= ``bound``.
    """

    states: frozenset[str]
    bound: float

    def __init__(self, states: Iterable[str], bound: float):
        object.__setattr__(self, "states", frozenset(states))
        object.__setattr__(self, "bound", float(bound))


@dataclass(frozen=True)
class CmdpInstance:
    """A complete problem: layered states, one polytope and one reward per
    nonterminal state, an initial distribution over the first layer and a
    list of visitation-mass constraints.

    Construction is permissive about value-level invariants so that
    :func:`validate` can report them; solvers refuse instances whose
    validation report is nonempty. All fields are immutable after
    construction and safe to share across threads.
    """

    states: LayeredStateSpace
    polytopes: Mapping[str, ActionPolytope]
    rewards: Mapping[str, RewardSpec]
    alpha: np.ndarray
    constraints: tuple[QualityConstraint, ...]

    def __init__(self, states, polytopes, rewards, alpha, constraints=()):
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "polytopes", dict(polytopes))
        object.__setattr__(self, "rewards", dict(rewards))
        object.__setattr__(self, "alpha", _readonly(alpha))
        object.__setattr__(self, "constraints", tuple(constraints))

    def next_layer_size(self, state: str) -> int:
        t = self.states.layer_of(state)
        return len(self.states.layers[t + 1])


def validate(instance: CmdpInstance) -> list[str]:
    """Check every model invariant and return one message per violation.

    An empty list means the instance satisfies all preconditions of the
    solver modules. Never raises; idempotent and side-effect free.
    """
    out: list[str] = []
    space = instance.states
    alpha = instance.alpha

    if alpha.size != len(space.layers[0]):
        out.append(
            f"alpha has {alpha.size} entries but the first layer has "
            f"{len(space.layers[0])} states"
        )
    else:
        s = float(alpha.sum())
        if abs(s - 1.0) > NORM_TOL:
            out.append(f"alpha sums to {s:.6g}")
        if alpha.min(initial=0.0) < -NORM_TOL:
            out.append(f"alpha has a negative entry ({alpha.min():.3g})")

    nonterminal = set(space.nonterminal())
    for s in sorted(nonterminal.symmetric_difference(instance.polytopes)):
        if s in nonterminal:
            out.append(f"state {s!r} has no action polytope")
        else:
            out.append(f"polytope given for non-decision state {s!r}")
    for s in sorted(nonterminal.symmetric_difference(instance.rewards)):
        if s in nonterminal:
            out.append(f"state {s!r} has no reward")
        else:
            out.append(f"reward given for non-decision state {s!r}")

    for s in sorted(nonterminal):
        poly = instance.polytopes.get(s)
        if poly is None:
            continue
        n = instance.next_layer_size(s)
        if poly.dim != n:
            out.append(
                f"polytope of {s!r} has dimension {poly.dim}, next layer has {n}"
            )
            continue
        b = poly.base
        bs = float(b.sum())
        if abs(bs - 1.0) > NORM_TOL:
            out.append(f"base of {s!r} sums to {bs:.6g}")
        if b.min() < -NORM_TOL:
            out.append(f"base of {s!r} has a negative entry ({b.min():.3g})")
        margin = poly.margin(b)
        if margin > NORM_TOL:
            out.append(
                f"base action of {s!r} lies outside its own polytope "
                f"(worst row violated by {margin:.3g})"
            )

        rew = instance.rewards.get(s)
        if rew is None:
            continue
        if rew.dim != n:
            out.append(f"reward of {s!r} has dimension {rew.dim}, expected {n}")
        if isinstance(rew, (WeightedL1Reward, QuadraticDeviationReward)):
            if rew.weights.min(initial=0.0) < 0:
                out.append(f"reward of {s!r} has negative weights")

    for i, qc in enumerate(instance.constraints):
        if not qc.states:
            out.append(f"constraint {i} has an empty state set")
        unknown = sorted(x for x in qc.states if x not in space)
        if unknown:
            out.append(f"constraint {i} references unknown states {unknown}")
        if qc.bound < 0:
            out.append(f"constraint {i} has negative bound {qc.bound:.6g}")
    return out


@dataclass(frozen=True)
class DeterministicPolicy:
    """One transition vector per nonterminal state."""

    actions: Mapping[str, np.ndarray]

    def __init__(self, actions: Mapping[str, Sequence[float]]):
        object.__setattr__(
            self, "actions", {s: _readonly(a) for s, a in actions.items()}
        )

    def action_marginal(self, state: str) -> np.ndarray:
        return self.actions[state]

    def expected_reward(self, state: str, reward: RewardSpec) -> float:
        return reward.value(self.actions[state])

    def check(self, instance: CmdpInstance, tol: float = FEAS_TOL) -> list[str]:
        out = []
        for s, a in self.actions.items():
            poly = instance.polytopes.get(s)
            if poly is None:
                out.append(f"policy stores an action for non-decision state {s!r}")
            elif not poly.contains(a, tol):
                out.append(f"policy action at {s!r} is infeasible")
        for s in instance.states.nonterminal():
            if s not in self.actions:
                out.append(f"policy missing an action for {s!r}")
        return out


# Mixture weights must sum to 1 within this tolerance.
MIX_TOL = 1e-10


@dataclass(frozen=True)
class RandomizedPolicy:
    """Finite mixture of feasible transition vectors per nonterminal state,
    stored as (weight, action) pairs."""

    mixtures: Mapping[str, tuple[tuple[float, np.ndarray], ...]]

    def __init__(self, mixtures):
        clean = {}
        for s, pairs in mixtures.items():
            clean[s] = tuple((float(w), _readonly(a)) for w, a in pairs)
        object.__setattr__(self, "mixtures", clean)

    def action_marginal(self, state: str) -> np.ndarray:
        pairs = self.mixtures[state]
        return sum(w * a for w, a in pairs)

    def expected_reward(self, state: str, reward: RewardSpec) -> float:
        return sum(w * reward.value(a) for w, a in self.mixtures[state])

    def check(self, instance: CmdpInstance, tol: float = FEAS_TOL) -> list[str]:
        out = []
        for s, pairs in self.mixtures.items():
            poly = instance.polytopes.get(s)
            if poly is None:
                out.append(f"policy stores a mixture for non-decision state {s!r}")
                continue
            wsum = sum(w for w, _ in pairs)
            if abs(wsum - 1.0) > MIX_TOL:
                out.append(f"mixture weights at {s!r} sum to {wsum:.12g}")
            if any(w < -MIX_TOL for w, _ in pairs):
                out.append(f"negative mixture weight at {s!r}")
            for k, (_, a) in enumerate(pairs):
                if not poly.contains(a, tol):
                    out.append(f"mixture atom {k} at {s!r} is infeasible")
        for s in instance.states.nonterminal():
            if s not in self.mixtures:
                out.append(f"policy missing a mixture for {s!r}")
        return out


Policy = Union[DeterministicPolicy, RandomizedPolicy]
