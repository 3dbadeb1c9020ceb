import math

import numpy as np
import pytest

from evmarket.choice import CandidateSet, Site
from evmarket.errors import DomainError, EnumerationLimitError, ValidationError
from evmarket.investment import (CostModel, brute_force_select, greedy_select, net_profit,
                                 piecewise_cost)
from evmarket.pricing import solve_uniform_profit

import oracles
from conftest import random_params, sites_from_vs, unit_params

PI_8, PI_13, PI_15 = 0.7178245124945949, 0.9369391340643325, 1.0074653742671793


class TestCostModel:
    def test_validation(self):
        for kw in ({"f0_capital": 0}, {"f0_capital": 1, "gamma": -0.1},
                   {"f0_capital": 1, "budget": -1}, {"f0_capital": math.inf}):
            with pytest.raises(ValidationError):
                CostModel(**kw)

    def test_max_stations(self):
        assert CostModel(0.1).max_stations(7) == 7
        assert CostModel(0.1, budget=0.3).max_stations(7) == 3
        assert CostModel(0.1, gamma=0.5, budget=0.3).max_stations(7) == 2
        assert CostModel(1.0, budget=0.5).max_stations(7) == 0


class TestPiecewiseCost:
    def test_breakpoints_and_segments(self):
        cm = CostModel(1.0)
        vs = [5.0, 3.0, 2.0]
        assert piecewise_cost(0.0, vs, cm) == 0.0
        assert piecewise_cost(5.0, vs, cm) == 1.0
        assert piecewise_cost(8.0, vs, cm) == 2.0
        assert piecewise_cost(10.0, vs, cm) == 3.0
        assert piecewise_cost(2.5, vs, cm) == pytest.approx(0.5)
        assert piecewise_cost(9.0, vs, cm) == pytest.approx(2.5)

    def test_convex(self):
        cm = CostModel(0.7, gamma=0.2)
        vs = sorted(np.random.default_rng(2).uniform(0.5, 9, 6), reverse=True)
        grid = np.linspace(0, sum(vs), 500)
        cost = np.array([piecewise_cost(v, vs, cm) for v in grid])
        assert np.all(np.diff(cost, 2) >= -1e-10)

    def test_domain(self):
        cm = CostModel(1.0)
        with pytest.raises(DomainError):
            piecewise_cost(11.0, [5.0, 3.0, 2.0], cm)
        with pytest.raises(DomainError):
            piecewise_cost(1.0, [2.0, 3.0], cm)


class TestGreedy:
    def test_empty_set_defers(self, p1):
        plan = greedy_select(CandidateSet(()), p1, CostModel(0.1))
        assert plan.deferred and plan.selected == () and net_profit(plan) == 0.0

    def test_huge_capital_cost_defers(self, p1, three_sites):
        plan = greedy_select(three_sites, p1, CostModel(1e6))
        assert plan.deferred and plan.n_stations == 0 and plan.pricing is None

    def test_three_site_reference(self, p1, three_sites):
        # net profits of the prefixes {8}, {8,5}, {8,5,2} at 0.1 per station
        plan = greedy_select(three_sites, p1, CostModel(0.05))
        assert plan.selected_ids == ("s1", "s2", "s3")
        assert plan.v == pytest.approx(15.0, rel=1e-12)
        assert plan.net_profit == pytest.approx(PI_15 - 0.15, abs=1e-10)
        # 0.7178 - 0.1 < 0.9369 - 0.2 > 1.0075 - 0.3
        plan = greedy_select(three_sites, p1, CostModel(0.1))
        assert plan.selected_ids == ("s1", "s2")
        assert plan.net_profit == pytest.approx(PI_13 - 0.2, abs=1e-10)
        plan = greedy_select(three_sites, p1, CostModel(0.25))
        assert plan.selected_ids == ("s1",)
        assert plan.net_profit == pytest.approx(PI_8 - 0.25, abs=1e-10)

    def test_net_profit_is_simple_subtraction(self, p1):
        sites = sites_from_vs([4.0, 6.0], p1)
        plan = greedy_select(sites, p1, CostModel(0.15))
        assert net_profit(plan) == pytest.approx(0.8145533119387641 - 0.3, abs=1e-10)

    def test_budget_respected(self, p1, three_sites):
        cm = CostModel(0.05, budget=0.1)
        plan = greedy_select(three_sites, p1, cm)
        assert plan.n_stations == 2 and plan.capital_cost <= cm.budget

    def test_permutation_invariant(self, p1):
        rng = np.random.default_rng(4)
        vs = list(rng.uniform(0.5, 10, 6))
        base = greedy_select(sites_from_vs(vs, p1), p1, CostModel(0.2))
        sites = list(sites_from_vs(vs, p1))
        for _ in range(5):
            rng.shuffle(sites)
            plan = greedy_select(CandidateSet(tuple(sites)), p1, CostModel(0.2))
            assert plan.selected_ids == base.selected_ids
            assert plan.net_profit == base.net_profit

    def test_selection_is_top_v_prefix(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            p = random_params(rng)
            sites = CandidateSet(tuple(Site(f"x{i}", float(rng.normal(1, 1)), float(rng.uniform(0, 1)))
                                       for i in range(6)))
            plan = greedy_select(sites, p, CostModel(float(rng.uniform(0.01, 0.3))))
            ranked = sites.sorted_by_v(p).sites
            assert plan.selected == ranked[:plan.n_stations]


class TestBruteForce:
    def test_matches_itertools_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(15):
            p = unit_params(alpha2=float(rng.uniform(0.3, 2)), beta1=float(rng.uniform(0.5, 2)))
            vs = list(rng.uniform(0.2, 8, 5))
            cm = CostModel(float(rng.uniform(0.02, 0.3)))
            plan = brute_force_select(sites_from_vs(vs, p), p, cm)
            best, _ = oracles.best_subset(
                vs, lambda v: oracles.profit_by_bisection(v, p.alpha2, p.beta1, 1, 1), cm.per_station)
            assert plan.net_profit == pytest.approx(best, abs=1e-9)

    def test_agrees_with_greedy(self, p1, three_sites):
        for f0 in (0.01, 0.1, 0.15, 0.3, 5.0):
            g = greedy_select(three_sites, p1, CostModel(f0))
            b = brute_force_select(three_sites, p1, CostModel(f0))
            assert b.selected_ids == g.selected_ids
            assert b.net_profit >= g.net_profit - 1e-12

    def test_single_site(self, p1):
        sites = sites_from_vs([10.0], p1)
        plan = brute_force_select(sites, p1, CostModel(0.1))
        assert plan.selected_ids == ("s1",)
        assert plan.net_profit == pytest.approx(0.8145533119387641 - 0.1, abs=1e-10)

    def test_tie_break_prefers_smallest_ids(self, p1):
        sites = sites_from_vs([3.0, 3.0, 3.0], p1)
        plan = brute_force_select(sites, p1, CostModel(0.05), guard=3)
        k = plan.n_stations
        assert plan.selected_ids == tuple(f"s{i + 1}" for i in range(k))

    def test_guard(self, p1):
        sites = sites_from_vs([1.0] * 21, p1)
        with pytest.raises(EnumerationLimitError):
            brute_force_select(sites, p1, CostModel(0.1))

    def test_budget(self, p1, three_sites):
        plan = brute_force_select(three_sites, p1, CostModel(0.01, budget=0.015))
        assert plan.selected_ids == ("s1",)
        sol = solve_uniform_profit(8.0, p1)
        assert plan.pricing.pi == pytest.approx(PI_8, abs=1e-10) == sol.pi
