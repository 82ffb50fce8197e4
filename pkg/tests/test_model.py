import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modcmdp import (
    ActionPolytope,
    AffineReward,
    CmdpInstance,
    DeterministicPolicy,
    LayeredStateSpace,
    QualityConstraint,
    RandomizedPolicy,
    WeightedL1Reward,
    box_polytope,
    validate,
)


def tiny_instance(bound=0.2, eps=0.4):
    space = LayeredStateSpace([["s"], ["ok", "bad"]])
    poly = box_polytope([0.5, 0.5], eps)
    return CmdpInstance(
        space,
        {"s": poly},
        {"s": WeightedL1Reward([0.5, 0.5])},
        [1.0],
        [QualityConstraint({"bad"}, bound)],
    )


class TestLayeredStateSpace:
    def test_positions(self):
        space = LayeredStateSpace([["a"], ["b", "c"], ["d"]])
        assert space.horizon == 3
        assert space.position("c") == (1, 1)
        assert list(space.nonterminal()) == ["a", "b", "c"]
        assert "d" in space and "zz" not in space

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            LayeredStateSpace([["a"], ["a"]])

    def test_empty_layer_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            LayeredStateSpace([["a"], []])

    def test_single_layer_rejected(self):
        with pytest.raises(ValueError, match="2 layers"):
            LayeredStateSpace([["a"]])


class TestBoxPolytope:
    def test_degenerate_box_only_contains_base(self):
        poly = box_polytope([0.5, 0.5], 0.0)
        assert poly.contains([0.5, 0.5])
        assert not poly.contains([0.51, 0.49])

    def test_two_dim_interval(self):
        poly = box_polytope([0.5, 0.5], 0.4)
        assert poly.contains([0.1, 0.9]) and poly.contains([0.9, 0.1])
        assert not poly.contains([0.05, 0.95])
        assert not poly.contains([0.95, 0.05])

    def test_lower_bound_clipped_at_zero(self):
        poly = box_polytope([1 / 3, 1 / 3, 1 / 3], 0.4)
        # upper bounds 1/3 + 0.4, lower bounds clipped to 0
        assert np.allclose(poly.h[:3], 1 / 3 + 0.4)
        assert np.allclose(poly.h[3:], 0.0)
        assert poly.contains([0.0, 1 / 3 + 0.4, 1 - 1 / 3 - 0.4])

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError, match="epsilon"):
            box_polytope([0.5, 0.5], -0.1)

    def test_non_distribution_base_rejected(self):
        with pytest.raises(ValueError, match="probability"):
            box_polytope([0.6, 0.6], 0.1)

    @given(st.integers(2, 6), st.floats(1.0, 3.0), st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_wide_box_equals_simplex(self, n, eps, seed):
        rng = np.random.default_rng(seed)
        base = rng.dirichlet(np.ones(n))
        poly = box_polytope(base, eps)
        for _ in range(10):
            a = rng.dirichlet(np.ones(n))
            assert poly.contains(a)

    def test_base_always_feasible(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 8))
            base = rng.dirichlet(np.ones(n))
            eps = float(rng.uniform(0, 1))
            poly = box_polytope(base, eps)
            assert poly.contains(poly.base)

    def test_arrays_immutable(self):
        poly = box_polytope([0.5, 0.5], 0.1)
        with pytest.raises(ValueError):
            poly.base[0] = 1.0
        with pytest.raises(ValueError):
            poly.H[0, 0] = 2.0


class TestValidate:
    def test_valid_instance_passes(self):
        assert validate(tiny_instance()) == []

    def test_alpha_normalization_failure(self):
        space = LayeredStateSpace([["a", "b"], ["c"]])
        inst = CmdpInstance(
            space,
            {"a": ActionPolytope([1.0]), "b": ActionPolytope([1.0])},
            {"a": AffineReward([0.0]), "b": AffineReward([0.0])},
            [0.6, 0.6],
            [],
        )
        report = validate(inst)
        assert any("alpha sums to 1.2" in v for v in report)

    def test_base_outside_own_polytope(self):
        # box centered away from the base distribution
        base = np.array([0.5, 0.5])
        eye = np.eye(2)
        H = np.vstack([eye, -eye])
        h = np.concatenate([[0.2 + 0.05, 0.8 + 0.05], [-(0.2 - 0.05), -(0.8 - 0.05)]])
        poly = ActionPolytope(base, H, h)
        space = LayeredStateSpace([["s"], ["ok", "bad"]])
        inst = CmdpInstance(
            space, {"s": poly}, {"s": AffineReward([0.0, 0.0])}, [1.0], []
        )
        report = validate(inst)
        assert any("outside its own polytope" in v for v in report)

    def test_missing_polytope_and_reward(self):
        space = LayeredStateSpace([["s"], ["t"]])
        inst = CmdpInstance(space, {}, {}, [1.0], [])
        report = validate(inst)
        assert any("no action polytope" in v for v in report)
        assert any("no reward" in v for v in report)

    def test_constraint_checks(self):
        inst = tiny_instance()
        bad = CmdpInstance(
            inst.states,
            inst.polytopes,
            inst.rewards,
            inst.alpha,
            [QualityConstraint({"nope"}, -0.5)],
        )
        report = validate(bad)
        assert any("unknown states" in v for v in report)
        assert any("negative bound" in v for v in report)

    def test_idempotent(self):
        inst = tiny_instance()
        assert validate(inst) == validate(inst) == []


class TestPolicies:
    def test_deterministic_check(self):
        inst = tiny_instance()
        good = DeterministicPolicy({"s": [0.8, 0.2]})
        assert good.check(inst) == []
        bad = DeterministicPolicy({"s": [0.05, 0.95]})
        assert any("infeasible" in v for v in bad.check(inst))
        missing = DeterministicPolicy({})
        assert any("missing" in v for v in missing.check(inst))

    def test_randomized_check_and_marginal(self):
        inst = tiny_instance()
        pol = RandomizedPolicy({"s": [(0.5, [0.9, 0.1]), (0.5, [0.1, 0.9])]})
        assert pol.check(inst) == []
        assert np.allclose(pol.action_marginal("s"), [0.5, 0.5])
        lopsided = RandomizedPolicy({"s": [(0.7, [0.9, 0.1]), (0.5, [0.1, 0.9])]})
        assert any("sum to" in v for v in lopsided.check(inst))

    def test_expected_reward_is_mixture_average(self):
        rew = WeightedL1Reward([0.5, 0.5])
        pol = RandomizedPolicy({"s": [(0.5, [0.9, 0.1]), (0.5, [0.1, 0.9])]})
        # each atom costs 0.8, the marginal (0.5, 0.5) costs 0
        assert pol.expected_reward("s", rew) == pytest.approx(-0.8)
        det = DeterministicPolicy({"s": pol.action_marginal("s")})
        assert det.expected_reward("s", rew) == pytest.approx(0.0)
