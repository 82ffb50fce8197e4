"""Build a two-period problem by hand, solve it, and inspect the result.

A single account starts current ("s") and next period is either still
performing ("ok") or delinquent ("bad"). The collector can shift the
transition distribution anywhere within 0.4 of the base (0.5, 0.5) per
coordinate, pays the L1 distance moved, and must keep the expected
delinquent mass at or below 0.2.
"""

import numpy as np

from modcmdp import (
    CmdpInstance,
    LayeredStateSpace,
    QualityConstraint,
    WeightedL1Reward,
    box_polytope,
    evaluate_exact,
    extract_policy,
    solve_occupancy,
    validate,
)

space = LayeredStateSpace([["s"], ["ok", "bad"]])
base = np.array([0.5, 0.5])
instance = CmdpInstance(
    states=space,
    polytopes={"s": box_polytope(base, 0.4)},
    rewards={"s": WeightedL1Reward(base)},
    alpha=[1.0],
    constraints=[QualityConstraint({"bad"}, 0.2)],
)

print("validation report:", validate(instance) or "clean")

solution = solve_occupancy(instance)
policy = extract_policy(solution, instance)
print(f"optimal modulation cost: {-solution.objective:.3f}")
print(f"chosen transition row:   {np.round(policy.actions['s'], 6)}")
print(f"delinquent mass:         {solution.visit_mass['bad']:.3f} (cap 0.2)")

report = evaluate_exact(instance, policy)
print(f"evaluator agrees: return {report.value:.6f}, feasible={report.feasible}")

# Relaxing the cap to 0.5 makes the base row feasible, so no modulation
# is bought at all.
relaxed = CmdpInstance(
    space, instance.polytopes, instance.rewards, instance.alpha,
    [QualityConstraint({"bad"}, 0.5)],
)
print(f"relaxed cap objective:   {solve_occupancy(relaxed).objective:.3f}")
