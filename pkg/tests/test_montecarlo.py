import math
from dataclasses import replace

import numpy as np
import pytest

from evmarket.choice import Site
from evmarket.errors import DomainError
from evmarket.investment import CostModel, InvestmentPlan, greedy_select
from evmarket.montecarlo import (closed_form_frequencies, gumbel, simulate_consumers,
                                 validate_closed_form, validate_frequencies)
from evmarket.pricing import solve_uniform_profit


def _fixed_price_plan(sites, prices):
    return InvestmentPlan(tuple(sites), 0.0, None, tuple(prices), 0.0, 0.0, False)


@pytest.fixture
def plan15(p1, three_sites):
    return greedy_select(three_sites, p1, CostModel(0.05))


def test_gumbel_moments():
    x = gumbel(np.random.default_rng(0), 400_000)
    assert np.all(np.isfinite(x))
    assert x.mean() == pytest.approx(np.euler_gamma, abs=0.01)
    assert x.var() == pytest.approx(math.pi ** 2 / 6, abs=0.02)


def test_two_option_gumbel_is_logistic():
    rng = np.random.default_rng(1)
    e = gumbel(rng, (400_000, 2))
    for d in (-1.0, 0.0, 0.7):
        freq = np.mean(d + e[:, 0] > e[:, 1])
        assert freq == pytest.approx(1 / (1 + math.exp(-d)), abs=4 * 0.5 / math.sqrt(4e5))


def test_symmetric_plan(p1):
    # one station with v = q0 at zero margin: P0 = P1 = 1/2, eta = 2/3
    sites = [Site("a", 0.0, 0.0)]
    sim = simulate_consumers(_fixed_price_plan(sites, [0.0]), p1, 1_000_000, 3)
    eta, shares = closed_form_frequencies(sites, [0.0], p1)
    assert eta == pytest.approx(2 / 3) and shares == pytest.approx((0.5, 0.5))
    assert all(c.passed for c in validate_frequencies(sim, eta, shares))


def test_expensive_ev_has_no_buyers(p1):
    p = replace(p1, pe=60.0)
    sim = simulate_consumers(_fixed_price_plan([], []), p, 10_000, 0)
    assert sim.eta_hat == 0.0 and sim.n_ev == 0
    assert math.isnan(sim.station_shares_hat[0])


def test_deterministic_across_workers(p1, plan15):
    a = simulate_consumers(plan15, p1, 300_000, 7, workers=1, block_size=50_000)
    b = simulate_consumers(plan15, p1, 300_000, 7, workers=4, block_size=50_000)
    c = simulate_consumers(plan15, p1, 300_000, 8, workers=1, block_size=50_000)
    assert a == b
    assert a != c


def test_agreement_and_power(p1, plan15):
    sim = simulate_consumers(plan15, p1, 1_000_000, 11)
    assert all(c.passed for c in validate_closed_form(sim, plan15.pricing))
    bad = validate_closed_form(sim, plan15.pricing, eta=plan15.pricing.eta + 0.05)
    assert not bad[0].passed
    assert all(c.passed for c in validate_closed_form(sim, plan15.pricing, z=math.inf,
                                                      eta=plan15.pricing.eta + 0.05))


def test_closed_form_split_matches_price_vector(p1, plan15):
    eta, shares = closed_form_frequencies(plan15.selected, plan15.prices, p1)
    sol = plan15.pricing
    assert eta == pytest.approx(sol.eta, rel=1e-12)
    assert shares[0] == pytest.approx(sol.p0, rel=1e-12)
    assert shares[1:] == pytest.approx([sol.station_share_sum * v / 15 for v in (8, 5, 2)], rel=1e-10)


def test_mismatched_solution_rejected(p1, plan15):
    sim = simulate_consumers(plan15, p1, 1000, 0)
    with pytest.raises(DomainError):
        validate_closed_form(sim, solve_uniform_profit(10.0, p1))
    with pytest.raises(DomainError):
        validate_frequencies(sim, 0.5, [0.5, 0.5])


def test_bad_sample_count(p1, plan15):
    with pytest.raises(DomainError):
        simulate_consumers(plan15, p1, 0, 0)


def test_error_shrinks_like_root_n(p1, plan15):
    target = plan15.pricing.eta
    med = []
    for n in (10_000, 160_000):
        errs = [abs(simulate_consumers(plan15, p1, n, s).eta_hat - target) for s in range(20)]
        med.append(float(np.median(errs)))
    ratio = med[0] / med[1]
    assert 2.0 < ratio < 8.0   # sqrt(16) = 4
