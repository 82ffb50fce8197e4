"""Occupancy-measure convex program over edge masses u(s, s') and visit
masses d(s), and extraction of the deterministic optimal policy.

The program maximizes the homogeneously lifted reward of each state's
outgoing edge-mass vector subject to flow conservation, the initial
distribution, visitation-mass caps, and the lifted polytope rows. For
affine and weighted-L1 rewards it is an exact linear program; concave
quadratic rewards are supported only through an opt-in tangent-cut
relaxation, and convex quadratic rewards belong to the envelope solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import lp as lpmod
from .model import (
    AffineReward,
    CmdpInstance,
    DeterministicPolicy,
    QuadraticDeviationReward,
    WeightedL1Reward,
    validate,
)

# Visit mass below which a state counts as unreachable and the policy
# falls back to the base action.
UNREACHABLE_TOL = 1e-9


class QualityInfeasibleError(RuntimeError):
    """The visitation-mass caps cannot all be met; carries the LP's
    infeasibility certificate when the embedded engine produced one."""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class OccupancySolution:
    """Optimal masses and objective. ``edge_mass[(s, s2)]`` is the joint
    probability of visiting s and stepping to s2; ``visit_mass[s]`` the
    probability of visiting s. ``bound`` is only set by the tangent-cut
    relaxation, where it carries the (possibly loose) LP upper bound while
    ``objective`` is the extracted policy's true return.
    """

    edge_mass: dict[tuple[str, str], float]
    visit_mass: dict[str, float]
    objective: float
    bound: Optional[float] = None

    def constraint_masses(self, instance: CmdpInstance) -> np.ndarray:
        return np.array(
            [
                sum(self.visit_mass.get(s, 0.0) for s in qc.states)
                for qc in instance.constraints
            ]
        )

    def check(self, instance: CmdpInstance, tol: float = 1e-7) -> list[str]:
        """Verify the occupancy invariants; empty list when consistent."""
        out = []
        space = instance.states
        for i, s in enumerate(space.layers[0]):
            if abs(self.visit_mass[s] - instance.alpha[i]) > tol:
                out.append(f"initial mass at {s!r} != alpha")
        for t, layer in enumerate(space.layers):
            tot = sum(self.visit_mass[s] for s in layer)
            if abs(tot - 1.0) > tol:
                out.append(f"layer {t} mass sums to {tot:.9f}")
            if t + 1 < len(space.layers):
                nxt = space.layers[t + 1]
                for s in layer:
                    row = sum(self.edge_mass[(s, s2)] for s2 in nxt)
                    if abs(row - self.visit_mass[s]) > tol:
                        out.append(f"outgoing mass at {s!r} != visit mass")
                for s2 in nxt:
                    col = sum(self.edge_mass[(s, s2)] for s in layer)
                    if abs(col - self.visit_mass[s2]) > tol:
                        out.append(f"incoming mass at {s2!r} != visit mass")
        masses = self.constraint_masses(instance)
        for i, qc in enumerate(instance.constraints):
            if masses[i] > qc.bound + 1e-8:
                out.append(f"constraint {i} violated: {masses[i]:.9f} > {qc.bound}")
        return out


@dataclass
class _Layout:
    """Column layout of the occupancy LP for one instance."""

    u_start: dict[str, int] = field(default_factory=dict)  # state -> block start
    d_index: dict[str, int] = field(default_factory=dict)
    aux_start: dict[str, int] = field(default_factory=dict)
    n_cols: int = 0
    names: list[str] = field(default_factory=list)


def _make_layout(instance: CmdpInstance, cuts: Optional[int]) -> _Layout:
    lay = _Layout()
    space = instance.states
    col = 0
    for t in range(space.horizon - 1):
        nxt = space.layers[t + 1]
        for s in space.layers[t]:
            lay.u_start[s] = col
            lay.names.extend(f"u:{s}:{s2}" for s2 in nxt)
            col += len(nxt)
    for layer in space.layers:
        for s in layer:
            lay.d_index[s] = col
            lay.names.append(f"d:{s}")
            col += 1
    for t in range(space.horizon - 1):
        for s in space.layers[t]:
            rew = instance.rewards[s]
            if isinstance(rew, WeightedL1Reward):
                lay.aux_start[s] = col
                lay.names.extend(f"z:{s}:{k}" for k in range(rew.dim))
                col += rew.dim
            elif isinstance(rew, QuadraticDeviationReward) and cuts:
                lay.aux_start[s] = col
                lay.names.append(f"t:{s}")
                col += 1
    lay.n_cols = col
    return lay


def _cut_points(poly, n_cuts: int, state_ord: int) -> list[np.ndarray]:
    """Deterministic tangent-cut anchor points inside the simplex."""
    pts = [np.asarray(poly.base, dtype=float)]
    rng = np.random.default_rng(1_000_003 * (state_ord + 1))
    while len(pts) < n_cuts:
        p = np.clip(poly.base + rng.uniform(-0.5, 0.5, size=poly.dim), 1e-6, None)
        pts.append(p / p.sum())
    return pts


def _check_rewards(instance: CmdpInstance, tangent_cuts: Optional[int]) -> None:
    for s in instance.states.nonterminal():
        rew = instance.rewards[s]
        if isinstance(rew, QuadraticDeviationReward):
            if rew.convex:
                raise ValueError(
                    f"reward at {s!r} is convex quadratic; the occupancy LP "
                    "cannot represent it — use the envelope solver "
                    "(modcmdp.envelope.solve_with_envelope)"
                )
            if not tangent_cuts:
                raise ValueError(
                    f"reward at {s!r} is concave quadratic, which is not "
                    "LP-representable; pass tangent_cuts=K to accept a "
                    "documented piecewise-linear outer approximation"
                )


def build_occupancy_lp(
    instance: CmdpInstance, tangent_cuts: Optional[int] = None
) -> lpmod.LpProblem:
    """Assemble the occupancy LP for an instance with affine or weighted-L1
    rewards (or, with ``tangent_cuts=K``, concave quadratic rewards under a
    K-cut outer approximation whose objective is an upper bound only).

    Raises ValueError on invalid instances or unsupported reward kinds.
    """
    report = validate(instance)
    if report:
        raise ValueError("invalid instance: " + "; ".join(report))
    _check_rewards(instance, tangent_cuts)

    from .extend import extend_reward

    space = instance.states
    lay = _make_layout(instance, tangent_cuts)
    n = lay.n_cols
    c = np.zeros(n)
    lower = np.zeros(n)

    rows_eq: list[tuple[list[int], list[float], float]] = []
    rows_in: list[tuple[list[int], list[float], float]] = []

    for i, s in enumerate(space.layers[0]):
        rows_eq.append(([lay.d_index[s]], [1.0], float(instance.alpha[i])))
    for t in range(space.horizon - 1):
        nxt = space.layers[t + 1]
        for s in space.layers[t]:
            u0 = lay.u_start[s]
            cols = list(range(u0, u0 + len(nxt))) + [lay.d_index[s]]
            rows_eq.append((cols, [1.0] * len(nxt) + [-1.0], 0.0))
    for t in range(1, space.horizon):
        prev = space.layers[t - 1]
        for j, s2 in enumerate(space.layers[t]):
            cols = [lay.u_start[s] + j for s in prev] + [lay.d_index[s2]]
            rows_eq.append((cols, [1.0] * len(prev) + [-1.0], 0.0))

    for qc in instance.constraints:
        cols = sorted(lay.d_index[s] for s in qc.states)
        rows_in.append((cols, [1.0] * len(cols), qc.bound))

    for t in range(space.horizon - 1):
        for s in space.layers[t]:
            poly = instance.polytopes[s]
            u0 = lay.u_start[s]
            dcol = lay.d_index[s]
            for r in range(poly.H.shape[0]):
                hrow = poly.H[r]
                nzj = np.flatnonzero(hrow)
                cols = [u0 + int(j) for j in nzj] + [dcol]
                vals = [float(hrow[j]) for j in nzj] + [-float(poly.h[r])]
                rows_in.append((cols, vals, 0.0))

    state_ord = 0
    for t in range(space.horizon - 1):
        nxt_len = len(space.layers[t + 1])
        for s in space.layers[t]:
            rew = instance.rewards[s]
            u0 = lay.u_start[s]
            dcol = lay.d_index[s]
            if isinstance(rew, AffineReward):
                c[u0 : u0 + nxt_len] += rew.e
                c[dcol] += rew.f
            elif isinstance(rew, WeightedL1Reward):
                z0 = lay.aux_start[s]
                c[z0 : z0 + nxt_len] = -rew.weights
                for k in range(nxt_len):
                    ab = float(rew.center[k])
                    rows_in.append(([u0 + k, dcol, z0 + k], [1.0, -ab, -1.0], 0.0))
                    rows_in.append(([u0 + k, dcol, z0 + k], [-1.0, ab, -1.0], 0.0))
            else:  # concave quadratic under tangent cuts
                tcol = lay.aux_start[s]
                c[tcol] = 1.0
                lower[tcol] = -np.inf
                ext = extend_reward(rew)
                for p in _cut_points(instance.polytopes[s], tangent_cuts, state_ord):
                    g = ext.gradient(p)
                    cols = [u0 + k for k in range(nxt_len)] + [tcol]
                    rows_in.append((cols, list(-g) + [1.0], 0.0))
            state_ord += 1

    def to_sparse(rows):
        data, ri, ci = [], [], []
        rhs = np.empty(len(rows))
        for i, (cols, vals, b) in enumerate(rows):
            ri.extend([i] * len(cols))
            ci.extend(cols)
            data.extend(vals)
            rhs[i] = b
        mat = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        return mat, rhs

    a_eq, b_eq = to_sparse(rows_eq)
    a_in, b_in = to_sparse(rows_in)
    return lpmod.LpProblem(
        c=c, a_eq=a_eq, b_eq=b_eq, a_in=a_in, b_in=b_in,
        lower=lower, names=tuple(lay.names),
    )


def solve_occupancy(
    instance: CmdpInstance,
    backend: str = "auto",
    tangent_cuts: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> OccupancySolution:
    """Solve the occupancy program and return the optimal masses.

    Raises QualityInfeasibleError when the visitation caps are jointly
    unsatisfiable, and RuntimeError on an unbounded program (impossible
    for valid instances; indicates a formulation bug).
    """
    problem = build_occupancy_lp(instance, tangent_cuts)
    sol = lpmod.solve_lp(problem, backend=backend, time_limit=time_limit)
    if sol.status == "infeasible":
        raise QualityInfeasibleError(
            "quality constraints unsatisfiable: " + sol.message,
            certificate=sol.certificate,
        )
    if sol.status == "unbounded":
        raise RuntimeError("occupancy LP unbounded — formulation bug")
    if sol.status == "limit_exceeded":
        raise TimeoutError(f"occupancy LP hit a limit: {sol.message}")
    if sol.status != "optimal":
        raise RuntimeError(f"occupancy LP did not converge: {sol.status}")

    lay = _make_layout(instance, tangent_cuts)
    space = instance.states
    x = sol.x
    edge = {}
    for t in range(space.horizon - 1):
        nxt = space.layers[t + 1]
        for s in space.layers[t]:
            u0 = lay.u_start[s]
            for j, s2 in enumerate(nxt):
                edge[(s, s2)] = max(float(x[u0 + j]), 0.0)
    visit = {s: max(float(x[lay.d_index[s]]), 0.0) for s in space.all_states()}

    if tangent_cuts:
        # the LP objective only bounds the true (quadratic) return; report
        # the extracted policy's achieved return as the objective
        from .evaluate import evaluate_exact

        tmp = OccupancySolution(edge, visit, objective=float(sol.objective))
        policy = extract_policy(tmp, instance)
        report = evaluate_exact(instance, policy)
        return OccupancySolution(
            edge, visit, objective=report.value, bound=float(sol.objective)
        )
    return OccupancySolution(edge, visit, objective=float(sol.objective))


def extract_policy(
    sol: OccupancySolution, instance: CmdpInstance
) -> DeterministicPolicy:
    """Deterministic policy dividing edge masses by visit mass; states with
    visit mass below 1e-9 fall back to their base action (their choice is
    immaterial and the base is always feasible)."""
    space = instance.states
    actions = {}
    for t in range(space.horizon - 1):
        nxt = space.layers[t + 1]
        for s in space.layers[t]:
            d = sol.visit_mass[s]
            poly = instance.polytopes[s]
            if d <= UNREACHABLE_TOL:
                actions[s] = poly.base
                continue
            a = np.array([sol.edge_mass[(s, s2)] for s2 in nxt]) / d
            a = np.clip(a, 0.0, None)
            a /= a.sum()
            if poly.margin(a) > 1e-7:
                raise RuntimeError(
                    f"extracted action at {s!r} violates its polytope by "
                    f"{poly.margin(a):.3e}"
                )
            actions[s] = a
    return DeterministicPolicy(actions)
