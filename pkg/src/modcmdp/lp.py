"""Dense linear-program solver and MPS exporter.

The embedded engine is a two-phase revised simplex with a dense,
explicitly maintained basis inverse (refactorized periodically) and
Bland's anti-cycling rule, so every solve terminates and is bitwise
deterministic. It is built for desk-scale problems; instances past the
size thresholds are dispatched to scipy's HiGHS interface when the
backend is left on "auto".

Conventions: maximize ``c @ x`` subject to ``a_eq @ x == b_eq``,
``a_in @ x <= b_in`` and ``lower <= x <= upper`` (lower defaults to 0,
upper to +inf). Duals are reported per original row in the max
convention, so at an optimum

    objective == b_eq @ dual_eq + b_in @ dual_in + bound terms,

with ``dual_in >= 0``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

# Pivot tolerance: reduced costs within this of zero count as optimal.
PIVOT_TOL = 1e-9
# Ratio-test tolerance: column entries below this never block or pivot.
# Must stay tiny — excluding genuine blocking rows voids Bland's
# termination guarantee; the per-pivot refactorization keeps the column
# accurate enough for this to be safe.
RATIO_TOL = 1e-9
# Primal feasibility tolerance.
FEAS_TOL = 1e-8
# Duality-gap / complementary-slackness tolerance.
DUAL_TOL = 1e-7

DEFAULT_MAXITER = 1_000_000
# Degenerate pivots tolerated before pricing falls back to Bland's rule.
STALL_LIMIT = 50

# Embedded engine size thresholds for backend="auto".
AUTO_MAX_ROWS = 200
AUTO_MAX_COLS = 1000

# When True (enabled by the test suite), every optimal embedded solve is
# re-verified: primal residuals, duality gap and complementary slackness.
STRICT_CHECKS = False


class LpError(ValueError):
    """Malformed problem (dimension mismatch, non-finite data)."""


def _as_matrix(a, ncols: int):
    if a is None:
        return sp.csr_matrix((0, ncols))
    if sp.issparse(a):
        return a.tocsr()
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        return sp.csr_matrix((0, ncols))
    return np.atleast_2d(arr)


@dataclass
class LpProblem:
    """maximize c @ x  s.t.  a_eq x = b_eq,  a_in x <= b_in,
    lower <= x <= upper.

    Matrices may be dense ndarrays or scipy.sparse; the embedded engine
    densifies them, the HiGHS backend keeps them sparse.
    """

    c: np.ndarray
    a_eq: object = None
    b_eq: np.ndarray = None
    a_in: object = None
    b_in: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    names: tuple[str, ...] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if n == 0:
            raise LpError("problem has no variables")
        self.a_eq = _as_matrix(self.a_eq, n)
        self.a_in = _as_matrix(self.a_in, n)
        self.b_eq = (
            np.zeros(self.a_eq.shape[0])
            if self.b_eq is None
            else np.asarray(self.b_eq, dtype=float).ravel()
        )
        self.b_in = (
            np.zeros(self.a_in.shape[0])
            if self.b_in is None
            else np.asarray(self.b_in, dtype=float).ravel()
        )
        if self.a_eq.shape != (self.b_eq.size, n):
            raise LpError(
                f"a_eq is {self.a_eq.shape}, expected ({self.b_eq.size}, {n})"
            )
        if self.a_in.shape != (self.b_in.size, n):
            raise LpError(
                f"a_in is {self.a_in.shape}, expected ({self.b_in.size}, {n})"
            )
        self.lower = (
            np.zeros(n)
            if self.lower is None
            else np.asarray(self.lower, dtype=float).ravel()
        )
        self.upper = (
            np.full(n, np.inf)
            if self.upper is None
            else np.asarray(self.upper, dtype=float).ravel()
        )
        if self.lower.size != n or self.upper.size != n:
            raise LpError("bound vectors must match the variable count")
        if not np.all(np.isfinite(self.c)):
            raise LpError("objective has non-finite coefficients")
        for m in (self.a_eq, self.a_in):
            data = m.data if sp.issparse(m) else m
            if not np.all(np.isfinite(data)):
                raise LpError("constraint matrix has non-finite coefficients")
        if not (np.all(np.isfinite(self.b_eq)) and np.all(np.isfinite(self.b_in))):
            raise LpError("rhs has non-finite entries")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise LpError("bounds wrong-signed infinity")
        if self.names is None:
            self.names = tuple(f"x{j}" for j in range(n))
        else:
            self.names = tuple(self.names)
            if len(self.names) != n:
                raise LpError("name table must match the variable count")

    @property
    def nvars(self) -> int:
        return self.c.size

    @property
    def nrows(self) -> int:
        return self.b_eq.size + self.b_in.size


@dataclass
class LpSolution:
    """Outcome of a solve.

    status is one of "optimal", "infeasible", "unbounded",
    "limit_exceeded". ``certificate`` holds a Farkas-type object for
    infeasible problems or an improving ray for unbounded ones (embedded
    engine only; the HiGHS backend leaves it None).
    """

    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    dual_eq: Optional[np.ndarray] = None
    dual_in: Optional[np.ndarray] = None
    iterations: int = 0
    certificate: object = None
    message: str = ""


def farkas_gap(problem: LpProblem, cert: dict) -> float:
    """Contradiction margin of an infeasibility certificate.

    The certificate provides multipliers y_eq (free), y_in >= 0 and
    y_up >= 0 (for finite upper bounds) such that every x in the bound
    box satisfying the rows would obey g @ x <= rhs, yet the box minimum
    of g @ x exceeds rhs. Returns that strictly positive margin.
    """
    y_eq = np.asarray(cert["eq"], dtype=float)
    y_in = np.asarray(cert["in"], dtype=float)
    y_up = np.asarray(cert["up"], dtype=float)
    g = problem.a_eq.T @ y_eq + problem.a_in.T @ y_in + y_up
    g = np.asarray(g).ravel()
    rhs = float(
        problem.b_eq @ y_eq
        + problem.b_in @ y_in
        + np.where(np.isfinite(problem.upper), problem.upper, 0.0) @ y_up
    )
    # min of g @ x over the box; negative g on an unbounded coordinate
    # would make the minimum -inf (certificate invalid).
    lo = problem.lower
    box_min = 0.0
    for j in range(problem.nvars):
        if g[j] >= 0:
            box_min += g[j] * (lo[j] if np.isfinite(lo[j]) else 0.0)
            if not np.isfinite(lo[j]) and g[j] > PIVOT_TOL:
                return -np.inf
        else:
            return -np.inf if g[j] < -1e-7 else box_min
    return box_min - rhs


# ---------------------------------------------------------------------------
# standard-form conversion


class _Standard:
    """min cs @ z, As z = bs, z >= 0, plus maps back to the user problem."""

    def __init__(self, p: LpProblem):
        n = p.nvars
        a_eq = p.a_eq.toarray() if sp.issparse(p.a_eq) else np.atleast_2d(p.a_eq)
        a_in = p.a_in.toarray() if sp.issparse(p.a_in) else np.atleast_2d(p.a_in)
        if a_eq.size == 0:
            a_eq = np.zeros((0, n))
        if a_in.size == 0:
            a_in = np.zeros((0, n))

        # Variable mapping: finite lower -> shift; free -> split pair.
        self.split = ~np.isfinite(p.lower)
        self.shift = np.where(self.split, 0.0, p.lower)
        cols = []  # (var j, sign)
        for j in range(n):
            cols.append((j, +1.0))
            if self.split[j]:
                cols.append((j, -1.0))
        self.cols = cols
        nz = len(cols)

        def expand(mat: np.ndarray) -> np.ndarray:
            out = np.empty((mat.shape[0], nz))
            for k, (j, sgn) in enumerate(cols):
                out[:, k] = sgn * mat[:, j]
            return out

        rows_a = [expand(a_eq), expand(a_in)]
        rows_b = [p.b_eq - a_eq @ self.shift, p.b_in - a_in @ self.shift]
        # finite upper bounds become rows over the shifted/split variables
        self.upper_vars = [j for j in range(n) if np.isfinite(p.upper[j])]
        if self.upper_vars:
            ub_a = np.zeros((len(self.upper_vars), nz))
            ub_b = np.empty(len(self.upper_vars))
            for r, j in enumerate(self.upper_vars):
                for k, (jj, sgn) in enumerate(cols):
                    if jj == j:
                        ub_a[r, k] = sgn
                ub_b[r] = p.upper[j] - self.shift[j]
            rows_a.append(ub_a)
            rows_b.append(ub_b)

        A = np.vstack(rows_a)
        b = np.concatenate(rows_b)
        m = A.shape[0]
        self.n_eq = p.b_eq.size
        self.n_in = p.b_in.size
        self.row_kind = (
            ["eq"] * self.n_eq + ["in"] * self.n_in + ["up"] * len(self.upper_vars)
        )

        # slacks for every inequality-type row
        slack_rows = list(range(self.n_eq, m))
        S = np.zeros((m, len(slack_rows)))
        for k, r in enumerate(slack_rows):
            S[r, k] = 1.0
        A = np.hstack([A, S])
        self.slack_of_row = {r: nz + k for k, r in enumerate(slack_rows)}

        # normalize rhs sign (keeps phase-1 artificials nonnegative)
        self.row_sign = np.ones(m)
        neg = b < 0
        if np.any(neg):
            A[neg] *= -1.0
            b[neg] *= -1.0
            self.row_sign[neg] = -1.0

        self.A = A
        self.b = b
        self.nz = nz
        self.n_total = A.shape[1]
        cs = np.zeros(self.n_total)
        for k, (j, sgn) in enumerate(cols):
            cs[k] = -sgn * p.c[j]  # maximize -> minimize
        self.cs = cs
        self.obj_shift = float(p.c @ self.shift)
        self.problem = p

    def x_from(self, z: np.ndarray) -> np.ndarray:
        x = self.shift.copy()
        for k, (j, sgn) in enumerate(self.cols):
            x[j] += sgn * z[k]
        return x

    def ray_from(self, z: np.ndarray) -> np.ndarray:
        r = np.zeros(self.problem.nvars)
        for k, (j, sgn) in enumerate(self.cols):
            r[j] += sgn * z[k]
        return r

    def duals_from(self, y: np.ndarray, negate: bool):
        """Split internal row duals back into (eq, in, up) in the max
        convention; ``negate`` flips min-form duals."""
        y = self.row_sign * y
        if negate:
            y = -y
        y_eq = y[: self.n_eq].copy()
        y_in = y[self.n_eq : self.n_eq + self.n_in].copy()
        y_up = np.zeros(self.problem.nvars)
        for k, j in enumerate(self.upper_vars):
            y_up[j] = y[self.n_eq + self.n_in + k]
        return y_eq, y_in, y_up


# ---------------------------------------------------------------------------
# revised simplex core


class _LimitExceeded(Exception):
    pass


class _Simplex:
    """Revised simplex over an explicit dense matrix. The basis is
    LU-refactorized from scratch on every pivot — wasteful but immune to
    update drift, which matters more here than speed (the formulations
    this engine serves are heavily degenerate)."""

    def __init__(self, A, b, maxiter, deadline):
        self.A = A
        self.b = b
        self.m, self.n = A.shape
        self.maxiter = maxiter
        self.deadline = deadline
        self.iterations = 0

    def factorize(self):
        import warnings

        from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

        B = self.A[:, self.basis]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinAlgWarning)
                self.lu = lu_factor(B, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise RuntimeError("basis became singular") from exc
        diag = np.abs(np.diag(self.lu[0]))
        if not np.all(np.isfinite(self.lu[0])) or (
            diag.size and diag.min() <= 1e-13 * max(1.0, diag.max())
        ):
            raise RuntimeError("basis became singular")
        self._solve = lambda v, trans=0: lu_solve(
            self.lu, v, trans=trans, check_finite=False
        )
        self.xb = self._solve(self.b)

    def run(self, c, allowed):
        """Minimize c over the current basis; ``allowed`` masks columns
        permitted to enter. Returns "optimal" or "unbounded" (storing the
        entering column index in .ray_col).

        Pricing is Dantzig (most negative reduced cost, lowest index on
        ties) while the objective is strictly improving; after a run of
        degenerate pivots it switches to Bland's rule, whose lowest-index
        discipline guarantees the stall cannot cycle, and switches back on
        the next strict improvement.
        """
        m = self.m
        in_basis = np.zeros(self.n, dtype=bool)
        in_basis[self.basis] = True
        stall = 0
        last_obj = np.inf
        while True:
            if self.iterations >= self.maxiter:
                raise _LimitExceeded("iteration limit")
            if self.deadline is not None and self.iterations % 64 == 0:
                if time.monotonic() > self.deadline:
                    raise _LimitExceeded("time limit")
            obj = float(c[self.basis] @ self.xb)
            if obj < last_obj - 1e-12 * max(1.0, abs(last_obj)):
                stall = 0
            else:
                stall += 1
            last_obj = obj
            y = self._solve(c[self.basis], trans=1)
            red = c - y @ self.A
            cand = np.flatnonzero(allowed & ~in_basis & (red < -PIVOT_TOL))
            if cand.size == 0:
                self.y = y
                return "optimal"
            if stall >= STALL_LIMIT:
                j = int(cand[0])  # Bland: lowest index enters
            else:
                j = int(cand[np.argmin(red[cand])])
            w = self._solve(self.A[:, j])
            pos = w > RATIO_TOL
            if not np.any(pos):
                self.ray_col = j
                self.ray_dir = w
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = np.clip(self.xb[pos], 0.0, None) / w[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            # Bland: among blocking rows, leave the lowest variable index
            leave = int(ties[np.argmin(self.basis[ties])])
            in_basis[self.basis[leave]] = False
            in_basis[j] = True
            self.basis[leave] = j
            self.iterations += 1
            self.factorize()

    def solution(self):
        z = np.zeros(self.n)
        z[self.basis] = np.clip(self.xb, 0.0, None)
        return z


def _solve_dense(problem: LpProblem, maxiter: int, deadline) -> LpSolution:
    try:
        return _dense_attempt(problem, maxiter, deadline, 0.0)
    except RuntimeError:
        # numerical breakdown on a degenerate basis: retry once with a
        # deterministic graded rhs perturbation far below the feasibility
        # tolerance (sum <= amp/2), which breaks the degeneracy
        return _dense_attempt(problem, maxiter, deadline, 2e-9)


def _dense_attempt(
    problem: LpProblem, maxiter: int, deadline, pert: float
) -> LpSolution:
    std = _Standard(problem)
    A, b = std.A, std.b
    m, n0 = A.shape
    if pert:
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        b = b + pert * scale * (np.arange(m) + 1.0) / (m * m)

    if m * (n0 + m) > 6e7:
        raise LpError(
            "problem too large for the embedded dense engine; "
            "use backend='highs'"
        )

    # Phase 1: artificials with unit cost.
    A1 = np.hstack([A, np.eye(m)])
    sx = _Simplex(A1, b, maxiter, deadline)
    sx.basis = np.arange(n0, n0 + m)
    # rows whose slack can start basic don't need their artificial
    for r, k in std.slack_of_row.items():
        if std.row_sign[r] > 0:
            sx.basis[r] = k
    sx.factorize()
    c1 = np.zeros(n0 + m)
    c1[n0:] = 1.0
    allowed1 = np.ones(n0 + m, dtype=bool)
    allowed1[n0:] = False
    try:
        status = sx.run(c1, allowed1)
    except _LimitExceeded as exc:
        return LpSolution(status="limit_exceeded", iterations=sx.iterations,
                          message=str(exc))
    if status == "unbounded":  # impossible: phase-1 objective >= 0
        raise RuntimeError("phase 1 reported unbounded")
    phase1_obj = float(c1[sx.basis] @ sx.xb)
    if phase1_obj > FEAS_TOL:
        y_eq, y_in, y_up = std.duals_from(sx.y, negate=True)
        cert = {"eq": y_eq, "in": y_in, "up": y_up}
        return LpSolution(
            status="infeasible",
            iterations=sx.iterations,
            certificate=cert,
            message=f"phase-1 objective {phase1_obj:.3e}",
        )

    # Drive artificials out of the basis; drop redundant rows. Any basic
    # artificial sits at a level <= FEAS_TOL here; swapping it against the
    # largest available pivot keeps the represented point within tolerance.
    art = sx.basis >= n0
    if np.any(art):
        drop_rows = []
        for r in np.flatnonzero(art):
            unit = np.zeros(m)
            unit[r] = 1.0
            row = sx._solve(unit, trans=1) @ A  # tableau row, real columns
            row[sx.basis[sx.basis < n0]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-7:
                sx.basis[r] = j
                sx.factorize()
            else:
                drop_rows.append(r)
        if drop_rows:
            keep = np.setdiff1d(np.arange(m), drop_rows)
            A = A[keep]
            b = b[keep]
            basis = np.array([sx.basis[r] for r in keep])
            it = sx.iterations
            sx = _Simplex(np.hstack([A, np.eye(keep.size)]), b, maxiter, deadline)
            sx.iterations = it
            sx.basis = basis
            sx.factorize()
            kept_rows = keep
        else:
            kept_rows = np.arange(m)
            sx.A = A1
    else:
        kept_rows = np.arange(m)
        sx.A = A1

    # Phase 2 on the real columns.
    c2 = np.zeros(sx.A.shape[1])
    c2[:n0] = std.cs
    allowed2 = np.zeros(sx.A.shape[1], dtype=bool)
    allowed2[:n0] = True
    try:
        status = sx.run(c2, allowed2)
    except _LimitExceeded as exc:
        return LpSolution(status="limit_exceeded", iterations=sx.iterations,
                          message=str(exc))
    if status == "unbounded":
        zray = np.zeros(n0)
        zray[sx.ray_col] = 1.0
        for pos, r in enumerate(sx.ray_dir):
            col = sx.basis[pos]
            if col < n0:
                zray[col] = -r
        ray = std.ray_from(zray)
        return LpSolution(
            status="unbounded", iterations=sx.iterations, certificate=ray
        )

    z = sx.solution()[:n0]
    x = std.x_from(z)
    obj = float(problem.c @ x)
    y_full = np.zeros(m)
    y_full[kept_rows] = sx.y
    y_eq, y_in, y_up = std.duals_from(y_full, negate=True)
    sol = LpSolution(
        status="optimal",
        x=x,
        objective=obj,
        dual_eq=y_eq,
        dual_in=y_in,
        iterations=sx.iterations,
    )
    if STRICT_CHECKS:
        _verify_optimal(problem, sol, y_up)
    return sol


def _verify_optimal(p: LpProblem, sol: LpSolution, y_up: np.ndarray) -> None:
    x = sol.x
    r_eq = p.a_eq @ x - p.b_eq
    r_in = p.a_in @ x - p.b_in
    feas = 0.0
    if r_eq.size:
        feas = max(feas, float(np.max(np.abs(r_eq))))
    if r_in.size:
        feas = max(feas, float(np.max(r_in)))
    feas = max(feas, float(np.max(np.clip(p.lower - x, 0, None), initial=0.0)))
    feas = max(feas, float(np.max(np.clip(x - p.upper, 0, None), initial=0.0)))
    scale = max(1.0, float(np.abs(p.b_eq).max(initial=0.0)),
                float(np.abs(p.b_in).max(initial=0.0)))
    assert feas <= FEAS_TOL * scale, f"primal residual {feas:.3e}"

    # strong duality incl. bound terms from reduced costs
    rc = p.c - np.asarray(p.a_eq.T @ sol.dual_eq).ravel() \
        - np.asarray(p.a_in.T @ sol.dual_in).ravel() - y_up
    bound_terms = 0.0
    for j in range(p.nvars):
        if rc[j] > 0:
            bound_terms += rc[j] * (p.lower[j] if np.isfinite(p.lower[j]) else 0.0)
    dual_obj = float(
        p.b_eq @ sol.dual_eq
        + p.b_in @ sol.dual_in
        + np.where(np.isfinite(p.upper), p.upper, 0.0) @ y_up
        + bound_terms
    )
    gap = abs(dual_obj - sol.objective)
    assert gap <= DUAL_TOL * max(1.0, abs(sol.objective)), f"duality gap {gap:.3e}"

    slack = p.b_in - p.a_in @ x
    if slack.size:
        cs = float(np.max(np.abs(sol.dual_in * slack)))
        assert cs <= DUAL_TOL * max(1.0, abs(sol.objective)), \
            f"complementary slackness {cs:.3e}"


# ---------------------------------------------------------------------------
# HiGHS backend


def _solve_highs(problem: LpProblem, maxiter: int, time_limit) -> LpSolution:
    from scipy.optimize import linprog

    p = problem
    bounds = [
        (None if not np.isfinite(lo) else lo, None if not np.isfinite(up) else up)
        for lo, up in zip(p.lower, p.upper)
    ]
    opts = {"presolve": True}
    if time_limit is not None:
        opts["time_limit"] = float(time_limit)
    res = linprog(
        c=-p.c,
        A_ub=p.a_in if p.b_in.size else None,
        b_ub=p.b_in if p.b_in.size else None,
        A_eq=p.a_eq if p.b_eq.size else None,
        b_eq=p.b_eq if p.b_eq.size else None,
        bounds=bounds,
        method="highs",
        options=opts,
    )
    nit = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        # scipy marginals are for the minimization form; negate for max.
        dual_eq = -res.eqlin.marginals if p.b_eq.size else np.zeros(0)
        dual_in = -res.ineqlin.marginals if p.b_in.size else np.zeros(0)
        return LpSolution(
            status="optimal",
            x=np.asarray(res.x, dtype=float),
            objective=float(p.c @ res.x),
            dual_eq=np.asarray(dual_eq, dtype=float),
            dual_in=np.asarray(dual_in, dtype=float),
            iterations=nit,
        )
    if res.status == 2:
        return LpSolution(status="infeasible", iterations=nit, message=res.message)
    if res.status == 3:
        return LpSolution(status="unbounded", iterations=nit, message=res.message)
    return LpSolution(status="limit_exceeded", iterations=nit, message=res.message)


def solve_lp(
    problem: LpProblem,
    backend: str = "auto",
    maxiter: int = DEFAULT_MAXITER,
    time_limit: Optional[float] = None,
) -> LpSolution:
    """Solve a linear program.

    backend "dense" forces the embedded simplex, "highs" the scipy/HiGHS
    interface, "auto" picks by problem size. The embedded engine attaches
    infeasibility/unboundedness certificates; see :func:`farkas_gap`.
    """
    if backend not in ("auto", "dense", "highs"):
        raise LpError(f"unknown backend {backend!r}")
    if np.any(problem.lower > problem.upper):
        j = int(np.argmax(problem.lower - problem.upper))
        return LpSolution(
            status="infeasible",
            certificate={"kind": "bounds", "var": j},
            message=f"variable {j} has lower > upper",
        )
    if backend == "auto":
        big = problem.nrows > AUTO_MAX_ROWS or problem.nvars > AUTO_MAX_COLS
        backend = "highs" if big else "dense"
    if backend == "dense":
        deadline = None if time_limit is None else time.monotonic() + time_limit
        return _solve_dense(problem, maxiter, deadline)
    return _solve_highs(problem, maxiter, time_limit)


# ---------------------------------------------------------------------------
# MPS fixed-format export


def _mps_num(v: float) -> str:
    for fmt in (".10G", ".8G", ".6G"):
        s = format(v, fmt)
        if len(s) <= 12:
            return s
    return format(v, ".4G")


def export_lp(problem: LpProblem, path) -> None:
    """Write the problem in MPS fixed format (maximization declared via an
    OBJSENSE section). Output is deterministic byte-for-byte for a given
    problem; rows and columns keep their construction order under
    generated 8-character names.
    """
    p = problem
    n = p.nvars
    m_eq, m_in = p.b_eq.size, p.b_in.size

    a_eq = sp.csc_matrix(p.a_eq) if not sp.issparse(p.a_eq) else p.a_eq.tocsc()
    a_in = sp.csc_matrix(p.a_in) if not sp.issparse(p.a_in) else p.a_in.tocsc()

    def rname(i: int) -> str:
        return f"R{i + 1:07d}"

    def cname(j: int) -> str:
        return f"C{j + 1:07d}"

    lines = []
    lines.append(f"NAME          {'MODCMDP':<8s}")
    lines.append("OBJSENSE")
    lines.append("    MAX")
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for i in range(m_eq):
        lines.append(f" E  {rname(i)}")
    for i in range(m_in):
        lines.append(f" L  {rname(m_eq + i)}")
    lines.append("COLUMNS")
    for j in range(n):
        col = cname(j)
        if p.c[j] != 0.0:
            lines.append(f"    {col:<8s}  {'OBJ':<8s}  {_mps_num(p.c[j]):>12s}")
        for mat, off in ((a_eq, 0), (a_in, m_eq)):
            if mat.shape[0] == 0:
                continue
            start, end = mat.indptr[j], mat.indptr[j + 1]
            order = np.argsort(mat.indices[start:end], kind="stable")
            for k in order:
                i = mat.indices[start + k]
                v = mat.data[start + k]
                if v != 0.0:
                    lines.append(
                        f"    {col:<8s}  {rname(off + i):<8s}  {_mps_num(v):>12s}"
                    )
    lines.append("RHS")
    for i in range(m_eq):
        if p.b_eq[i] != 0.0:
            lines.append(
                f"    {'RHS':<8s}  {rname(i):<8s}  {_mps_num(p.b_eq[i]):>12s}"
            )
    for i in range(m_in):
        if p.b_in[i] != 0.0:
            lines.append(
                f"    {'RHS':<8s}  {rname(m_eq + i):<8s}  "
                f"{_mps_num(p.b_in[i]):>12s}"
            )
    lines.append("BOUNDS")
    for j in range(n):
        lo, up = p.lower[j], p.upper[j]
        col = cname(j)
        if not np.isfinite(lo):
            lines.append(f" MI {'BND':<8s}  {col:<8s}")
        elif lo != 0.0:
            lines.append(f" LO {'BND':<8s}  {col:<8s}  {_mps_num(lo):>12s}")
        if np.isfinite(up):
            lines.append(f" UP {'BND':<8s}  {col:<8s}  {_mps_num(up):>12s}")
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    try:
        with open(path, "w") as f:
            f.write(text)
    except OSError as exc:
        raise OSError(f"cannot write MPS file {path}: {exc}") from exc
