"""The extreme-point route: replace each continuous action polytope by
its vertices, solve the finite problem, and convert between randomized
vertex policies and deterministic interior ones.

With affine rewards this reduction is exact, so the finite optimum
matches the occupancy LP; the vertex count is what eventually blows up.
"""

import numpy as np

from modcmdp import (
    AffineReward,
    CmdpInstance,
    LayeredStateSpace,
    QualityConstraint,
    box_polytope,
    build_finite_cmdp,
    enumerate_for_instance,
    enumerate_vertices,
    mix_to_point,
    point_to_mix,
    solve_finite,
    solve_occupancy,
)

poly = box_polytope([0.5, 0.5], 0.4)
print("vertices of the 1-d box segment:", enumerate_vertices(poly).tolist())

poly3 = box_polytope([1 / 3, 1 / 3, 1 / 3], 0.4)
verts3 = enumerate_vertices(poly3)
print(f"vertices of the 2-d box-in-simplex ({len(verts3)}):")
print(np.round(verts3, 4))

space = LayeredStateSpace([["s"], ["ok", "bad"]])
instance = CmdpInstance(
    space,
    {"s": poly},
    {"s": AffineReward([0.0, -1.0])},  # pay for landing in "bad"
    [1.0],
    [QualityConstraint({"bad"}, 0.2)],
)

finite = build_finite_cmdp(instance, enumerate_for_instance(instance))
obj_finite, randomized = solve_finite(finite)
obj_convex = solve_occupancy(instance).objective
print(f"finite-action optimum:  {obj_finite:.6f}")
print(f"occupancy LP optimum:   {obj_convex:.6f}  (equal, affine reward)")

print("randomized vertex policy:",
      [(round(w, 4), a.tolist()) for w, a in randomized.mixtures["s"]])
merged = mix_to_point(randomized)
print("merged deterministic row:", np.round(merged.actions["s"], 6).tolist())

# and back: decompose an interior action over the vertices
pairs = point_to_mix([0.5, 0.5], enumerate_vertices(poly))
print("decomposition of (0.5, 0.5):",
      [(round(w, 4), v.tolist()) for w, v in pairs])
