"""Why randomize? A convex reward values extreme moves more than their
average, so the best achievable value at a given transition row is the
concave envelope — reachable by mixing vertex actions, not by playing
the row directly.

Here the reward is the squared mass sent to the second terminal state.
Playing (0.6, 0.4) directly earns 0.16; mixing the two corners with
weights 0.6/0.4 has the same transition row but earns 0.4.
"""

import numpy as np

from modcmdp import (
    ActionPolytope,
    CmdpInstance,
    DeterministicPolicy,
    LayeredStateSpace,
    QualityConstraint,
    QuadraticDeviationReward,
    build_envelope,
    envelope_value,
    evaluate_exact,
    naive_linear_baseline,
    solve_with_envelope,
)

space = LayeredStateSpace([["s"], ["s1", "s2"]])
instance = CmdpInstance(
    space,
    {"s": ActionPolytope([1.0, 0.0])},  # whole simplex
    {"s": QuadraticDeviationReward([0.0, 0.0], convex=True, weights=[0.0, 1.0])},
    [1.0],
    [QualityConstraint({"s2"}, 0.4)],
)

model = build_envelope(instance)
for a in ([1.0, 0.0], [0.6, 0.4], [0.0, 1.0]):
    value, lam = envelope_value(model, "s", a)
    direct = instance.rewards["s"].value(a)
    print(f"a={a}: direct reward {direct:.3f}, envelope {value:.3f}")

objective, policy = solve_with_envelope(instance)
print(f"\nenvelope optimum under the 0.4 cap: {objective:.3f}")
print("optimal mixture:",
      [(round(w, 4), a.tolist()) for w, a in policy.mixtures["s"]])

randomized = evaluate_exact(instance, policy).value
merged = evaluate_exact(
    instance, DeterministicPolicy({"s": policy.action_marginal("s")})
).value
print(f"randomized return {randomized:.3f} vs merged-action return {merged:.3f}")

naive, _ = naive_linear_baseline(instance)
print(f"first-order (tangent) baseline return: {naive:.3f}")
