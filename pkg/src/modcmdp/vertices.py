"""Extreme-point machinery: vertex enumeration for the per-state action
polytopes, the finite-action reduction built on those vertices, its
occupancy LP, and conversions between randomized vertex policies and
deterministic interior ones.

Vertex enumeration is exhaustive basis enumeration by default: pick n-1
active rows among the polytope rows and the nonnegativity bounds, solve
together with the simplex equality, keep feasible solutions, dedup. Its
combinatorial cost is intentional (the benchmark exhibits the blowup);
box-shaped polytopes additionally get a structured enumerator that scales
to the dimensions the envelope solver needs.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import lp as lpmod
from .model import (
    ActionPolytope,
    CmdpInstance,
    DeterministicPolicy,
    RandomizedPolicy,
    validate,
)
from .occupancy import QualityInfeasibleError, UNREACHABLE_TOL

# Two vertices closer than this in L-infinity are considered equal.
DEDUP_TOL = 1e-7
# Feasibility slack accepted when filtering candidate basis solutions.
VERTEX_FEAS_TOL = 1e-9
# Exhaustive enumeration refuses beyond this dimension.
MAX_EXHAUSTIVE_DIM = 25

_BATCH = 1 << 15


class DecompositionError(RuntimeError):
    """Requested point is not in the convex hull of the given vertices."""


@dataclass(frozen=True)
class VertexSet:
    """Per-state vertex arrays (each row one vertex) and the dedup
    tolerance used to produce them."""

    vertices: dict[str, np.ndarray]
    dedup_tol: float = DEDUP_TOL

    def counts(self) -> dict[str, int]:
        return {s: v.shape[0] for s, v in self.vertices.items()}

    def total(self) -> int:
        return sum(v.shape[0] for v in self.vertices.values())


def _dedup(points: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points:
        if kept:
            arr = np.array(kept)
            if np.min(np.max(np.abs(arr - p), axis=1)) <= tol:
                continue
        kept.append(p)
    return np.array(kept) if kept else np.zeros((0, points.shape[1]))


def _exhaustive(
    poly: ActionPolytope,
    extra_planes: list[tuple[int, float]] | None,
    deadline: float | None = None,
) -> np.ndarray:
    n = poly.dim
    if n == 1:
        a = np.ones(1)
        ok = poly.contains(a, tol=VERTEX_FEAS_TOL * 10)
        return a.reshape(1, 1) if ok else np.zeros((0, 1))

    # active-row pool: polytope rows, nonnegativity bounds, optional
    # reward kink planes (a_k = value)
    rows = [poly.H]
    rhs = [poly.h]
    eye = np.eye(n)
    rows.append(-eye)
    rhs.append(np.zeros(n))
    for k, val in extra_planes or []:
        rows.append(eye[k : k + 1])
        rhs.append(np.array([val]))
    pool = np.vstack(rows)
    pool_rhs = np.concatenate(rhs)
    npool = pool.shape[0]

    found = []
    combos = itertools.combinations(range(npool), n - 1)
    while True:
        if deadline is not None and time.monotonic() > deadline:
            raise TimeoutError("vertex enumeration exceeded its time budget")
        chunk = list(itertools.islice(combos, _BATCH))
        if not chunk:
            break
        idx = np.array(chunk)
        m = np.empty((len(chunk), n, n))
        m[:, 0, :] = 1.0
        m[:, 1:, :] = pool[idx]
        r = np.empty((len(chunk), n))
        r[:, 0] = 1.0
        r[:, 1:] = pool_rhs[idx]
        dets = np.linalg.det(m)
        good = np.abs(dets) > 1e-10
        if not np.any(good):
            continue
        sols = np.linalg.solve(m[good], r[good][..., None])[..., 0]
        resid = np.max(np.abs(m[good] @ sols[..., None] - r[good][..., None]), axis=(1, 2))
        cand = sols[resid <= 1e-7]
        feas = (
            (cand.min(axis=1) >= -VERTEX_FEAS_TOL)
            & (np.abs(cand.sum(axis=1) - 1.0) <= VERTEX_FEAS_TOL)
        )
        if poly.H.shape[0]:
            feas &= np.all(cand @ poly.H.T - poly.h <= VERTEX_FEAS_TOL, axis=1)
        if np.any(feas):
            found.append(cand[feas])
    if not found:
        return np.zeros((0, n))
    return _dedup(np.vstack(found), DEDUP_TOL)


def box_bounds(poly: ActionPolytope):
    """Recover per-coordinate bounds when the polytope rows form the
    box pattern [I; -I]; returns (lower, upper) or None."""
    n = poly.dim
    if poly.H.shape != (2 * n, n):
        return None
    if not (np.array_equal(poly.H[:n], np.eye(n))
            and np.array_equal(poly.H[n:], -np.eye(n))):
        return None
    return np.clip(-poly.h[n:], 0.0, None), poly.h[:n]


def box_simplex_vertices(lower, upper) -> np.ndarray:
    """All vertices of {a : lower <= a <= upper, sum(a) = 1}.

    A vertex fixes every coordinate at a bound except at most one free
    coordinate absorbing the residual. Writing g = upper - lower and
    R = 1 - sum(lower), the coordinates raised to their upper bound form
    a subset S with gap-sum in [R - max(g), R]; those subsets are walked
    once with window pruning, then the free coordinate is vectorized, so
    the cost is close to linear in the output size.
    """
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    n = lo.size
    tol = 1e-9
    if lo.sum() > 1.0 + tol or up.sum() < 1.0 - tol or np.any(up < lo - tol):
        return np.zeros((0, n))
    g = up - lo
    R = 1.0 - lo.sum()
    movable = np.flatnonzero(g > tol)
    gm = g[movable]
    order = np.argsort(-gm, kind="stable")
    gm = gm[order]
    movable = movable[order]
    suffix = np.concatenate([np.cumsum(gm[::-1])[::-1], [0.0]])
    g_max = gm[0] if gm.size else 0.0
    w_lo = R - g_max - tol

    subsets: list[tuple[tuple[int, ...], float]] = []

    def dfs(pos: int, cur: float, chosen: tuple[int, ...]):
        if cur >= w_lo:
            subsets.append((chosen, cur))
        for k in range(pos, gm.size):
            t2 = cur + gm[k]
            if t2 > R + tol:
                continue  # gaps are sorted desc; later ones may still fit
            if t2 + suffix[k + 1] < w_lo:
                break  # even taking the whole suffix cannot reach the window
            dfs(k + 1, t2, chosen + (k,))

    dfs(0, 0.0, ())

    rows: list[np.ndarray] = []
    for chosen, gapsum in subsets:
        base = lo.copy()
        for k in chosen:
            base[movable[k]] = up[movable[k]]
        resid = R - gapsum  # extra mass the free coordinate must absorb
        if resid <= tol:
            if resid >= -tol:
                rows.append(base)
            continue
        in_s = np.zeros(n, dtype=bool)
        in_s[movable[list(chosen)]] = True
        ok = np.flatnonzero((g >= resid - tol) & ~in_s)
        for f in ok:
            v = base.copy()
            v[f] = lo[f] + resid
            rows.append(v)
    if not rows:
        return np.zeros((0, n))
    pts = np.clip(np.vstack(rows), 0.0, None)
    pts = pts[np.abs(pts.sum(axis=1) - 1.0) <= 1e-9]
    # bound arithmetic is exact, so duplicates (free coord landing on a
    # bound) collapse under rounding
    pts = np.unique(np.round(pts, 9), axis=0)
    if pts.shape[0] <= 400:
        pts = _dedup(pts, DEDUP_TOL)
    return pts


def enumerate_vertices(
    poly: ActionPolytope,
    method: str = "exhaustive",
    max_dim: int = MAX_EXHAUSTIVE_DIM,
    extra_planes: list[tuple[int, float]] | None = None,
    deadline: float | None = None,
) -> np.ndarray:
    """Vertices of one action polytope, one per row.

    method "exhaustive" is the basis enumeration described above and
    refuses dimensions past ``max_dim`` (use the occupancy solver there);
    "box" requires the [I; -I] row pattern; "auto" picks "box" when the
    pattern matches (and no kink planes are requested), falling back to
    "exhaustive".
    """
    if method not in ("exhaustive", "box", "auto"):
        raise ValueError(f"unknown enumeration method {method!r}")
    if method == "auto":
        method = "box" if (box_bounds(poly) and not extra_planes) else "exhaustive"
    if method == "box":
        bounds = box_bounds(poly)
        if bounds is None:
            raise ValueError("polytope rows are not in box form")
        if extra_planes:
            raise ValueError("kink planes need method='exhaustive'")
        verts = box_simplex_vertices(*bounds)
    else:
        if poly.dim > max_dim:
            raise ValueError(
                f"dimension {poly.dim} exceeds the exhaustive enumeration "
                f"limit {max_dim}; use the occupancy solver instead"
            )
        verts = _exhaustive(poly, extra_planes, deadline)
    if verts.shape[0] == 0:
        raise ValueError("polytope has no vertices (empty feasible set)")
    return verts


def enumerate_for_instance(
    instance: CmdpInstance,
    method: str = "exhaustive",
    max_dim: int = MAX_EXHAUSTIVE_DIM,
    kink_planes: bool = False,
    deadline: float | None = None,
) -> VertexSet:
    """Enumerate per-state vertex sets, reusing work across states that
    share one polytope. With ``kink_planes`` the weighted-L1 reward kinks
    are added to the active-row pool, so the point set supports an exact
    finite-action reduction for those rewards.
    """
    from .model import WeightedL1Reward

    cache: dict[bytes, np.ndarray] = {}
    out = {}
    for s in instance.states.nonterminal():
        poly = instance.polytopes[s]
        planes = None
        if kink_planes:
            rew = instance.rewards[s]
            if isinstance(rew, WeightedL1Reward):
                planes = [(k, float(c)) for k, c in enumerate(rew.center)]
        key = poly.base.tobytes() + poly.H.tobytes() + poly.h.tobytes() + repr(planes).encode()
        if key not in cache:
            cache[key] = enumerate_vertices(
                poly, method=method, max_dim=max_dim,
                extra_planes=planes, deadline=deadline,
            )
        out[s] = cache[key]
    return VertexSet(out)


@dataclass(frozen=True)
class FiniteCmdp:
    """Finite-action reduction: per state, the action list is a vertex
    array whose rows double as the transition vectors, with the original
    reward evaluated at each vertex."""

    instance: CmdpInstance
    actions: dict[str, np.ndarray]
    rewards: dict[str, np.ndarray]


def build_finite_cmdp(instance: CmdpInstance, vertex_set: VertexSet) -> FiniteCmdp:
    bad = validate(instance)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(bad))
    from .model import reward_values

    rewards = {
        s: reward_values(instance.rewards[s], vertex_set.vertices[s])
        for s in instance.states.nonterminal()
    }
    return FiniteCmdp(instance, dict(vertex_set.vertices), rewards)


def solve_finite(
    fc: FiniteCmdp, backend: str = "auto", time_limit=None
) -> tuple[float, RandomizedPolicy]:
    """Occupancy LP of the finite-action reduction: one mass variable per
    (state, vertex), flow conservation, initial distribution and the
    visitation caps. Returns the optimal value and the randomized vertex
    policy u(s, i) / d(s)."""
    import scipy.sparse as sp

    instance = fc.instance
    space = instance.states
    col = 0
    u_start = {}
    for t in range(space.horizon - 1):
        for s in space.layers[t]:
            u_start[s] = col
            col += fc.actions[s].shape[0]
    d_index = {}
    for layer in space.layers:
        for s in layer:
            d_index[s] = col
            col += 1
    n = col

    # row order: initial | outgoing per state | incoming per state
    row = 0
    init_row = {s: (row := row + 1) - 1 for s in space.layers[0]}
    out_row = {}
    for t in range(space.horizon - 1):
        for s in space.layers[t]:
            out_row[s] = row
            row += 1
    in_row = {}
    for t in range(1, space.horizon):
        for s in space.layers[t]:
            in_row[s] = row
            row += 1
    m_eq = row

    c = np.zeros(n)
    b_eq = np.zeros(m_eq)
    blocks_r, blocks_c, blocks_v = [], [], []

    for i, s in enumerate(space.layers[0]):
        blocks_r.append([init_row[s]])
        blocks_c.append([d_index[s]])
        blocks_v.append([1.0])
        b_eq[init_row[s]] = float(instance.alpha[i])
    for t in range(space.horizon - 1):
        nxt = space.layers[t + 1]
        nxt_rows = np.array([in_row[s2] for s2 in nxt])
        for s in space.layers[t]:
            verts = fc.actions[s]
            nv = verts.shape[0]
            u0 = u_start[s]
            c[u0 : u0 + nv] = fc.rewards[s]
            cols = np.arange(u0, u0 + nv)
            # outgoing: sum_i u(s,i) - d(s) = 0
            blocks_r.append(np.full(nv + 1, out_row[s]))
            blocks_c.append(np.append(cols, d_index[s]))
            blocks_v.append(np.append(np.ones(nv), -1.0))
            # incoming: each vertex row contributes its coordinates
            vi, vj = np.nonzero(verts)
            blocks_r.append(nxt_rows[vj])
            blocks_c.append(cols[vi])
            blocks_v.append(verts[vi, vj])
        for s2 in nxt:
            blocks_r.append([in_row[s2]])
            blocks_c.append([d_index[s2]])
            blocks_v.append([-1.0])

    a_eq = sp.csr_matrix(
        (
            np.concatenate([np.asarray(b, dtype=float) for b in blocks_v]),
            (
                np.concatenate([np.asarray(b, dtype=np.int64) for b in blocks_r]),
                np.concatenate([np.asarray(b, dtype=np.int64) for b in blocks_c]),
            ),
        ),
        shape=(m_eq, n),
    )
    if instance.constraints:
        ri, ci, vv = [], [], []
        b_in = np.zeros(len(instance.constraints))
        for k, qc in enumerate(instance.constraints):
            for s in sorted(qc.states):
                ri.append(k)
                ci.append(d_index[s])
                vv.append(1.0)
            b_in[k] = qc.bound
        a_in = sp.csr_matrix((vv, (ri, ci)), shape=(len(b_in), n))
    else:
        a_in, b_in = None, None
    problem = lpmod.LpProblem(c=c, a_eq=a_eq, b_eq=b_eq, a_in=a_in, b_in=b_in)
    sol = lpmod.solve_lp(problem, backend=backend, time_limit=time_limit)
    if sol.status == "infeasible":
        raise QualityInfeasibleError(
            "quality constraints unsatisfiable: " + sol.message,
            certificate=sol.certificate,
        )
    if sol.status == "limit_exceeded":
        raise TimeoutError(f"finite-action LP hit a limit: {sol.message}")
    if sol.status != "optimal":
        raise RuntimeError(f"finite-action LP did not converge: {sol.status}")

    mixtures = {}
    for t in range(space.horizon - 1):
        for s in space.layers[t]:
            verts = fc.actions[s]
            nv = verts.shape[0]
            d = float(sol.x[d_index[s]])
            if d <= UNREACHABLE_TOL:
                mixtures[s] = [(1.0, verts[0])]
                continue
            lam = np.clip(sol.x[u_start[s] : u_start[s] + nv], 0.0, None) / d
            keep = np.flatnonzero(lam > 1e-12)
            lam = lam[keep] / lam[keep].sum()
            mixtures[s] = [(float(w), verts[i]) for w, i in zip(lam, keep)]
    return float(sol.objective), RandomizedPolicy(mixtures)


def mix_to_point(policy: RandomizedPolicy) -> DeterministicPolicy:
    """Collapse each state's mixture to its mean action. Transition
    probabilities are unchanged, and for concave rewards the per-state
    reward can only improve."""
    return DeterministicPolicy(
        {s: policy.action_marginal(s) for s in policy.mixtures}
    )


def point_to_mix(a, vertices) -> list[tuple[float, np.ndarray]]:
    """Express ``a`` as a convex combination of the given vertices via an
    LP feasibility solve. Returns (weight, vertex) pairs with at most
    dim(a) nonzero weights; raises DecompositionError outside the hull.
    """
    a = np.asarray(a, dtype=float)
    verts = np.asarray(vertices, dtype=float)
    nv = verts.shape[0]
    a_eq = np.vstack([verts.T, np.ones((1, nv))])
    b_eq = np.concatenate([a, [1.0]])
    problem = lpmod.LpProblem(c=np.zeros(nv), a_eq=a_eq, b_eq=b_eq)
    sol = lpmod.solve_lp(problem, backend="dense")
    if sol.status != "optimal":
        raise DecompositionError(
            f"point is not in the convex hull of {nv} vertices"
        )
    lam = np.clip(sol.x, 0.0, None)
    keep = np.flatnonzero(lam > 1e-12)
    lam = lam[keep] / lam[keep].sum()
    return [(float(w), verts[i]) for w, i in zip(lam, keep)]


def certify_extreme(verts: np.ndarray, tol: float = 1e-7) -> bool:
    """LP check that no vertex is a convex combination of the others
    (used in tests to certify enumeration output)."""
    nv = verts.shape[0]
    for i in range(nv):
        others = np.delete(verts, i, axis=0)
        if others.shape[0] == 0:
            continue
        try:
            pairs = point_to_mix(verts[i], others)
        except DecompositionError:
            continue
        mix = sum(w * v for w, v in pairs)
        if np.max(np.abs(mix - verts[i])) <= tol:
            return False
    return True
