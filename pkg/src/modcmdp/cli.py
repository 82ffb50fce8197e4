"""Command-line entry point: solve problem files, generate loan
instances, evaluate policies, and run the benchmark harness.

Every command writes a ``<out>.manifest.json`` next to its output with
the argv, input hashes, seed, package version and wall time, so any
published number can be regenerated from one command line. Exit codes:
0 optimal/success, 2 infeasible, 3 timeout, 1 any other error. The
environment variable MODCMDP_TIMEOUT sets the default per-solve time
budget in seconds.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

import numpy as np

from . import __version__, fileio
from .envelope import naive_linear_baseline, solve_with_envelope
from .evaluate import evaluate_exact, simulate
from .loans import (
    BENCH_METHODS,
    LoanConfig,
    generate_loan_instance,
    greedy_baseline,
    run_benchmark,
    write_benchmark_csv,
)
from .model import validate
from .occupancy import QualityInfeasibleError, extract_policy, solve_occupancy
from .vertices import build_finite_cmdp, enumerate_for_instance, solve_finite

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


def _manifest(command, args_dict, inputs, outputs, seed, wall):
    args = {}
    for k, v in args_dict.items():
        if k in ("func", "states_list") or v is None:
            continue
        args[k] = v if isinstance(v, (bool, int, float, str)) else str(v)
    return {
        "command": command,
        "arguments": args,
        "input_hashes": {str(p): _hash_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "version": __version__,
        "wall_time_s": wall,
    }


def _write_with_manifest(payload, out, manifest):
    fileio.dump_json(payload, out)
    fileio.dump_json(manifest, str(out) + ".manifest.json")


def _default_timeout():
    v = os.environ.get("MODCMDP_TIMEOUT")
    return float(v) if v else None


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    instance = fileio.problem_from_json(fileio.load_json(args.problem))
    bad = validate(instance)
    if bad:
        print("problem file failed validation:", file=sys.stderr)
        for line in bad:
            print("  -", line, file=sys.stderr)
        return EXIT_ERROR

    method = args.method
    try:
        if method == "convex":
            sol = solve_occupancy(
                instance,
                backend=args.backend,
                tangent_cuts=args.tangent_cuts,
                time_limit=args.timeout,
            )
            policy = extract_policy(sol, instance)
            objective, visit, bound = sol.objective, sol.visit_mass, sol.bound
        elif method == "extreme":
            kinks = not args.vertex_only
            deadline = None if args.timeout is None else time.monotonic() + args.timeout
            vs = enumerate_for_instance(
                instance, method="exhaustive", kink_planes=kinks, deadline=deadline
            )
            fc = build_finite_cmdp(instance, vs)
            objective, policy = solve_finite(
                fc, backend=args.backend, time_limit=args.timeout
            )
            visit = evaluate_exact(instance, policy).visit_mass
            bound = None
        elif method == "envelope":
            objective, policy = solve_with_envelope(
                instance, backend=args.backend, time_limit=args.timeout
            )
            visit = evaluate_exact(instance, policy).visit_mass
            bound = None
        elif method == "greedy":
            objective, policy = greedy_baseline(instance, backend=args.backend)
            visit = evaluate_exact(instance, policy).visit_mass
            bound = None
        elif method == "naive-linear":
            objective, policy = naive_linear_baseline(instance, backend=args.backend)
            visit = evaluate_exact(instance, policy).visit_mass
            bound = None
        else:
            print(f"unknown method {method!r}", file=sys.stderr)
            return EXIT_ERROR
    except QualityInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.certificate is not None:
            print("  (a Farkas-type certificate is available)", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TimeoutError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    payload = fileio.solution_to_json(instance, objective, visit, policy, bound)
    wall = time.perf_counter() - t0
    _write_with_manifest(
        payload,
        args.out,
        _manifest("solve", vars(args), [args.problem],
                  [args.out], None, wall),
    )
    print(f"objective {objective:.9g} written to {args.out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    t0 = time.perf_counter()
    kind = {"l1": "l1", "quad": "quad_convex"}[args.reward]
    cfg = LoanConfig(
        n_states=args.states,
        horizon=args.horizon,
        epsilon=args.epsilon,
        q_default=args.qbound,
        reward_kind=kind,
        seed=args.seed,
    )
    instance = generate_loan_instance(cfg)
    payload = fileio.problem_to_json(instance)
    wall = time.perf_counter() - t0
    _write_with_manifest(
        payload, args.out,
        _manifest("generate", vars(args), [], [args.out], args.seed, wall),
    )
    print(f"{args.states}-level loan problem written to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    instance = fileio.problem_from_json(fileio.load_json(args.problem))
    policy = fileio.policy_from_json(fileio.load_json(args.policy))
    try:
        report = evaluate_exact(instance, policy)
        payload = {"exact": fileio.report_to_json(report)}
        if args.simulate:
            emp = simulate(instance, policy, args.simulate, seed=args.seed)
            payload["simulated"] = fileio.report_to_json(emp)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    wall = time.perf_counter() - t0
    _write_with_manifest(
        payload, args.out,
        _manifest("evaluate", vars(args), [args.problem, args.policy],
                  [args.out], args.seed, wall),
    )
    print(f"exact return {report.value:.9g} written to {args.out}")
    return EXIT_OK


def _parse_states(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x]


def _parse_sweep(text: str) -> list[float]:
    lo, hi, step = (float(x) for x in text.split(":"))
    if step <= 0:
        raise ValueError("sweep step must be positive")
    out = []
    v = lo
    while v <= hi + 1e-12:
        out.append(round(v, 12))
        v += step
    return out


def cmd_benchmark(args) -> int:
    t0 = time.perf_counter()
    methods = [m for m in args.methods.split(",") if m]
    kind = {"l1": "l1", "quad": "quad_convex", "affine": "affine"}[args.reward]
    cfg = LoanConfig(
        n_states=args.states_list[0],
        horizon=args.horizon,
        epsilon=args.epsilon,
        q_default=args.qbound,
        reward_kind=kind,
        seed=args.seed,
    )
    q_values = _parse_sweep(args.q_sweep) if args.q_sweep else None
    records = run_benchmark(
        args.states_list, methods, cfg=cfg, q_values=q_values,
        timeout=args.timeout, backend=args.backend,
    )
    write_benchmark_csv(records, args.out)
    wall = time.perf_counter() - t0
    fileio.dump_json(
        _manifest("benchmark", vars(args), [], [args.out], args.seed, wall),
        str(args.out) + ".manifest.json",
    )
    worst = {r.status for r in records}
    print(f"{len(records)} cells -> {args.out} (statuses: {sorted(worst)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="modcmdp",
        description="solvers for constrained MDPs with transition-probability "
        "modulation",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    sv = sub.add_parser("solve", help="solve a problem file")
    sv.add_argument("problem")
    sv.add_argument("--method", required=True,
                    choices=["convex", "extreme", "envelope", "greedy",
                             "naive-linear"])
    sv.add_argument("--out", required=True)
    sv.add_argument("--backend", default="auto",
                    choices=["auto", "dense", "highs"])
    sv.add_argument("--tangent-cuts", type=int, default=None,
                    help="opt-in K-cut outer approximation for concave "
                    "quadratic rewards (objective becomes an upper bound)")
    sv.add_argument("--vertex-only", action="store_true",
                    help="extreme method: skip the reward kink planes for "
                    "L1 rewards (restricted, lower-bound variant)")
    sv.add_argument("--timeout", type=float, default=_default_timeout())
    sv.set_defaults(func=cmd_solve)

    gen = sub.add_parser("generate", help="generate a synthetic problem file")
    gsub = gen.add_subparsers(dest="family", required=True)
    loan = gsub.add_parser("loan", help="loan-delinquency chain")
    loan.add_argument("--states", type=int, default=8)
    loan.add_argument("--horizon", type=int, default=6)
    loan.add_argument("--epsilon", type=float, default=0.4)
    loan.add_argument("--qbound", type=float, default=0.04)
    loan.add_argument("--reward", default="l1", choices=["l1", "quad"])
    loan.add_argument("--seed", type=int, default=0)
    loan.add_argument("--out", required=True)
    loan.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="evaluate a policy file")
    ev.add_argument("problem")
    ev.add_argument("policy")
    ev.add_argument("--simulate", type=int, default=0,
                    help="also report a Monte Carlo estimate from N "
                    "trajectories")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate)

    bm = sub.add_parser("benchmark", help="timing/quality sweeps to CSV")
    bm.add_argument("--states", required=True,
                    help="range a..b or comma list")
    bm.add_argument("--methods", required=True,
                    help="comma list from " + ",".join(BENCH_METHODS))
    bm.add_argument("--q-sweep", default=None,
                    help="lo:hi:step cap sweep at the first state count")
    bm.add_argument("--reward", default="l1",
                    choices=["l1", "quad", "affine"])
    bm.add_argument("--horizon", type=int, default=6)
    bm.add_argument("--epsilon", type=float, default=0.4)
    bm.add_argument("--qbound", type=float, default=0.04)
    bm.add_argument("--seed", type=int, default=0)
    bm.add_argument("--timeout", type=float,
                    default=_default_timeout() or 300.0)
    bm.add_argument("--backend", default="auto",
                    choices=["auto", "dense", "highs"])
    bm.add_argument("--out", required=True)
    bm.set_defaults(func=cmd_benchmark)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "benchmark":
        args.states_list = _parse_states(args.states)
    try:
        return args.func(args)
    except fileio.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
