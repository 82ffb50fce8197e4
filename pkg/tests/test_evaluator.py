import numpy as np
import pytest

from helpers import random_instance

from modcmdp import (
    ActionPolytope,
    CmdpInstance,
    DeterministicPolicy,
    LayeredStateSpace,
    QualityConstraint,
    QuadraticDeviationReward,
    RandomizedPolicy,
    WeightedL1Reward,
    box_polytope,
    evaluate_exact,
    extract_policy,
    mix_to_point,
    simulate,
    solve_occupancy,
)


def chain_instance():
    """Three layers of two states; the policy walks a deterministic chain
    a -> c -> f with probability one."""
    space = LayeredStateSpace([["a", "b"], ["c", "d"], ["e", "f"]])
    poly = ActionPolytope([0.5, 0.5])
    inst = CmdpInstance(
        space,
        {s: poly for s in ("a", "b", "c", "d")},
        {s: WeightedL1Reward([0.5, 0.5]) for s in ("a", "b", "c", "d")},
        [1.0, 0.0],
        [],
    )
    policy = DeterministicPolicy(
        {"a": [1.0, 0.0], "b": [1.0, 0.0], "c": [0.0, 1.0], "d": [0.0, 1.0]}
    )
    return inst, policy


def square_instance():
    space = LayeredStateSpace([["s"], ["s1", "s2"]])
    return CmdpInstance(
        space,
        {"s": ActionPolytope([1.0, 0.0])},
        {"s": QuadraticDeviationReward([0.0, 0.0], convex=True, weights=[0.0, 1.0])},
        [1.0],
        [],
    )


class TestExact:
    def test_indicator_chain(self):
        inst, policy = chain_instance()
        report = evaluate_exact(inst, policy)
        assert report.visit_mass == pytest.approx(
            {"a": 1.0, "b": 0.0, "c": 1.0, "d": 0.0, "e": 0.0, "f": 1.0}
        )

    def test_base_policy_l1_return_is_zero(self):
        space = LayeredStateSpace([["s"], ["ok", "bad"]])
        poly = box_polytope([0.7, 0.3], 0.2)
        inst = CmdpInstance(
            space, {"s": poly}, {"s": WeightedL1Reward([0.7, 0.3])}, [1.0], []
        )
        report = evaluate_exact(inst, DeterministicPolicy({"s": [0.7, 0.3]}))
        assert report.value == 0.0

    def test_randomized_reward_is_mixture_average(self):
        inst = square_instance()
        randomized = RandomizedPolicy(
            {"s": [(0.6, [1.0, 0.0]), (0.4, [0.0, 1.0])]}
        )
        assert evaluate_exact(inst, randomized).value == pytest.approx(0.4)
        merged = DeterministicPolicy({"s": [0.6, 0.4]})
        assert evaluate_exact(inst, merged).value == pytest.approx(0.16)

    def test_constraint_reporting(self):
        space = LayeredStateSpace([["s"], ["ok", "bad"]])
        poly = box_polytope([0.5, 0.5], 0.4)
        inst = CmdpInstance(
            space, {"s": poly}, {"s": WeightedL1Reward([0.5, 0.5])}, [1.0],
            [QualityConstraint({"bad"}, 0.3)],
        )
        good = evaluate_exact(inst, DeterministicPolicy({"s": [0.8, 0.2]}))
        assert good.feasible
        assert good.constraint_slacks[0] == pytest.approx(0.1)
        bad = evaluate_exact(inst, DeterministicPolicy({"s": [0.6, 0.4]}))
        assert not bad.feasible

    def test_infeasible_policy_rejected(self):
        inst, _ = chain_instance()
        with pytest.raises(ValueError, match="infeasible policy"):
            evaluate_exact(inst, DeterministicPolicy({"a": [2.0, -1.0]}))

    def test_layer_masses_sum_to_one(self, rng):
        for _ in range(10):
            inst = random_instance(rng, reward="l1", constraint_chance=0.0)
            policy = DeterministicPolicy(
                {s: inst.polytopes[s].base for s in inst.states.nonterminal()}
            )
            report = evaluate_exact(inst, policy)
            for layer in inst.states.layers:
                total = sum(report.visit_mass[s] for s in layer)
                assert total == pytest.approx(1.0, abs=1e-10)

    def test_jensen_direction(self, rng):
        # concave rewards: merging a mixture into its mean action can only
        # help; convex rewards: it can only hurt
        inst = square_instance()
        mix = RandomizedPolicy({"s": [(0.5, [0.9, 0.1]), (0.5, [0.1, 0.9])]})
        det = mix_to_point(mix)
        assert (
            evaluate_exact(inst, det).value
            <= evaluate_exact(inst, mix).value + 1e-12
        )
        concave = CmdpInstance(
            inst.states, inst.polytopes,
            {"s": WeightedL1Reward([0.5, 0.5])}, inst.alpha, [],
        )
        assert (
            evaluate_exact(concave, det).value
            >= evaluate_exact(concave, mix).value - 1e-12
        )


class TestSimulate:
    def test_chain_has_zero_variance(self):
        inst, policy = chain_instance()
        report = simulate(inst, policy, trajectories=2000, seed=7)
        assert report.visit_mass["f"] == 1.0
        assert report.visit_mass["e"] == 0.0
        assert report.std_error == 0.0

    def test_seed_determinism_bit_identical(self):
        import json

        from modcmdp.fileio import report_to_json

        inst = square_instance()
        policy = RandomizedPolicy({"s": [(0.6, [1.0, 0.0]), (0.4, [0.0, 1.0])]})
        a = simulate(inst, policy, trajectories=5000, seed=123)
        b = simulate(inst, policy, trajectories=5000, seed=123)
        assert json.dumps(report_to_json(a)) == json.dumps(report_to_json(b))

    def test_different_seeds_differ(self):
        inst = square_instance()
        policy = RandomizedPolicy({"s": [(0.6, [1.0, 0.0]), (0.4, [0.0, 1.0])]})
        a = simulate(inst, policy, trajectories=5000, seed=1)
        b = simulate(inst, policy, trajectories=5000, seed=2)
        assert a.value != b.value

    def test_converges_to_exact(self):
        inst = square_instance()
        policy = RandomizedPolicy({"s": [(0.6, [1.0, 0.0]), (0.4, [0.0, 1.0])]})
        report = simulate(inst, policy, trajectories=100_000, seed=42)
        assert abs(report.value - 0.4) <= 3 * report.std_error

    def test_deterministic_policy_visit_masses(self, rng):
        inst, _ = chain_instance()
        policy = DeterministicPolicy(
            {s: [0.6, 0.4] for s in inst.states.nonterminal()}
        )
        exact = evaluate_exact(inst, policy)
        emp = simulate(inst, policy, trajectories=200_000, seed=5)
        for s, m in exact.visit_mass.items():
            se = np.sqrt(max(m * (1 - m), 1e-12) / 200_000)
            assert abs(emp.visit_mass[s] - m) <= 4 * se + 1e-9

    def test_trajectory_count_validated(self):
        inst, policy = chain_instance()
        with pytest.raises(ValueError, match="trajectories"):
            simulate(inst, policy, trajectories=0)


class TestOracleAgreement:
    def test_solver_objective_matches_evaluator(self, rng):
        for _ in range(8):
            inst = random_instance(rng, reward="l1")
            try:
                sol = solve_occupancy(inst, backend="dense")
            except Exception:
                continue
            policy = extract_policy(sol, inst)
            report = evaluate_exact(inst, policy)
            assert report.value == pytest.approx(sol.objective, abs=1e-7)
