import math

import numpy as np
import pytest

from rackalloc.allocation import (
    DiscreteColumnsSpec,
    ResourceAllocInstance,
    ResourceAllocationFamily,
    StateSpaceError,
    dp_solve,
    gen_binary_knapsack,
    scenario_tree_solve,
)
from rackalloc.milp import SolveLimits
from rackalloc.policies import run_hindsight, run_oso

FAST = SolveLimits(time_limit=60, relative_gap=1e-6)


class TestDp:
    def test_deterministic_uncertainty_equals_hindsight(self):
        # point mass: the optimal online policy sees no uncertainty
        col = (1.0, 0.0)
        spec = DiscreteColumnsSpec(1, 2, (1.0,), (col,))
        inst = ResourceAllocInstance(6, 1, 2, [3.0, 6.0], spec, seed=0)
        policy = dp_solve(inst)
        fam = ResourceAllocationFamily(inst)
        hs = run_hindsight(fam, fam.realizations(), FAST)
        assert policy.expected_value == pytest.approx(hs.total_objective)
        assert policy.evaluate(fam.realizations()) == pytest.approx(hs.total_objective)

    def test_refuses_when_state_space_too_large(self):
        inst = gen_binary_knapsack(T=20, B=10, d=6, seed=0)
        with pytest.raises(StateSpaceError, match="cap"):
            dp_solve(inst, state_cap=5_000_000)

    def test_refuses_continuous_uncertainty(self):
        from rackalloc.allocation import gen_knapsack

        inst = gen_knapsack(B=0.1, psi=0.0, seed=0, T=6)
        with pytest.raises(StateSpaceError, match="continuous"):
            dp_solve(inst)

    def test_policy_value_between_heuristics_and_hindsight(self):
        # on a small scale the optimal online policy dominates any resolving
        # heuristic in expectation and is dominated by hindsight
        T, B, d = 6, 3, 2
        inst0 = gen_binary_knapsack(T=T, B=B, d=d, seed=0)
        policy = dp_solve(inst0)
        oso_vals, hs_vals, dp_vals = [], [], []
        for rep in range(60):
            inst = gen_binary_knapsack(T=T, B=B, d=d, seed=3000 + rep)
            fam = ResourceAllocationFamily(inst)
            reals = fam.realizations()
            dp_vals.append(policy.evaluate(reals))
            oso = run_oso(fam, 1, np.random.default_rng(rep), FAST, realizations=reals)
            oso_vals.append(oso.total_objective)
            hs_vals.append(run_hindsight(fam, reals, FAST).total_objective)
        n = len(dp_vals)
        se = lambda v: float(np.std(v, ddof=1)) / math.sqrt(n)  # noqa: E731
        assert np.mean(dp_vals) >= np.mean(oso_vals) - 2 * (se(dp_vals) + se(oso_vals))
        assert np.mean(dp_vals) <= np.mean(hs_vals) + 2 * (se(dp_vals) + se(hs_vals))


class TestScenarioTree:
    def test_matches_dp_exactly_small(self):
        for T, B in ((4, 2), (6, 3)):
            inst = gen_binary_knapsack(T=T, B=B, d=2, seed=0)
            policy = dp_solve(inst, exact=True)
            tree = scenario_tree_solve(inst)
            # both values live on the 1 / 4^T grid; compare there exactly
            assert tree.scaled_value == policy.expected_value_exact * 4**T

    def test_published_value_at_smallest_scale(self):
        inst = gen_binary_knapsack(T=4, B=2, d=2, seed=0)
        tree = scenario_tree_solve(inst)
        assert tree.expected_value == pytest.approx(3.34, abs=0.15)

    def test_refuses_at_t12(self):
        inst = gen_binary_knapsack(T=12, B=6, d=2, seed=0)
        with pytest.raises(StateSpaceError, match="cap"):
            scenario_tree_solve(inst)

    def test_refuses_nonuniform_support(self):
        spec = DiscreteColumnsSpec(1, 1, (0.75, 0.25), ((0.0,), (1.0,)))
        inst = ResourceAllocInstance(3, 1, 1, [2.0], spec, seed=0)
        with pytest.raises(StateSpaceError, match="uniform"):
            scenario_tree_solve(inst)


class TestLargerDpScale:
    def test_dp_value_at_largest_published_scale(self):
        # T=20, B=10, d=5: the largest grid the recursion handles before
        # the state-space cap; published policy mean 17.34
        inst0 = gen_binary_knapsack(T=20, B=10, d=5, seed=0)
        policy = dp_solve(inst0)
        vals = []
        for rep in range(100):
            inst = gen_binary_knapsack(T=20, B=10, d=5, seed=52000 + rep)
            fam = ResourceAllocationFamily(inst)
            vals.append(policy.evaluate(fam.realizations()))
        assert abs(float(np.mean(vals)) - 17.34) <= 0.3
