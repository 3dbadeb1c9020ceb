"""Consumer surplus, the welfare-maximizing planner and subsidy sweeps.

The planner picks locations only.  Prices inside every welfare evaluation
are still the investor's optimal uniform profit for the chosen sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .choice import CandidateSet, ChoiceParams, logit_shares
from .errors import ValidationError
from .investment import CostModel, InvestmentPlan, greedy_select, make_plan, piecewise_cost, \
    prefix_candidates
from .pricing import DEFAULT_SETTINGS, PricingSolution, SolverSettings, operational_profit


@dataclass(frozen=True)
class SubsidySetting:
    ev_subsidy: float = 0.0       # dollars off the EV price
    capital_subsidy: float = 0.0  # fraction of per-station capital cost

    def __post_init__(self):
        if not (self.ev_subsidy >= 0 and math.isfinite(self.ev_subsidy)):
            raise ValidationError("subsidy invariant violated: evSubsidy >= 0")
        if not 0 <= self.capital_subsidy < 1:
            raise ValidationError("subsidy invariant violated: 0 <= capitalSubsidy < 1")


DEFAULT_SUBSIDY_GRID = tuple(
    SubsidySetting(s_e, sigma) for s_e in (0.0, 0.5, 1.0, 2.0) for sigma in (0.0, 0.25, 0.5, 0.75))


@dataclass(frozen=True)
class WelfareReport:
    market: InvestmentPlan
    planner: InvestmentPlan
    cs_market: float
    cs_planner: float
    sw_market: float
    sw_planner: float
    ties: bool   # some objective has several maximizing prefixes

    @property
    def v_market(self):
        return self.market.v

    @property
    def v_planner(self):
        return self.planner.v

    @property
    def n_market(self):
        return self.market.n_stations

    @property
    def n_planner(self):
        return self.planner.n_stations

    @property
    def gap(self):
        return self.sw_planner - self.sw_market

    def to_dict(self) -> dict:
        return {
            "vMarket": self.v_market, "vPlanner": self.v_planner,
            "nMarket": self.n_market, "nPlanner": self.n_planner,
            "consumerSurplusMarket": self.cs_market,
            "consumerSurplusPlanner": self.cs_planner,
            "socialWelfareMarket": self.sw_market,
            "socialWelfarePlanner": self.sw_planner,
            "gap": self.gap, "ties": self.ties,
            "marketPlan": self.market.to_dict(), "plannerPlan": self.planner.to_dict(),
        }


def consumer_surplus(v: float, sol: Optional[PricingSolution], p: ChoiceParams) -> float:
    """Log-sum over vehicle types: ``ln[(q0 + kappa)**beta1 * C1 + C2]``."""
    k = 0.0 if (v == 0 or sol is None) else sol.kappa
    log_x = float(logit_shares(0.0, 0.0, p).log_x) if k == 0 else \
        float(np.logaddexp(p.log_q0, math.log(k)))
    return float(np.logaddexp(p.beta1 * log_x + p.log_c1, p.log_c2))


def social_welfare(v: float, sol: Optional[PricingSolution], p: ChoiceParams, cm: CostModel,
                   sorted_vs: Sequence[float]) -> float:
    return consumer_surplus(v, sol, p) + operational_profit(v, sol) - piecewise_cost(v, sorted_vs, cm)


def _planner_scan(sites, p, cm, settings):
    ordered, prefixes = prefix_candidates(sites, p, cm, settings)
    objs = [consumer_surplus(v, sol, p) + operational_profit(v, sol) - k * cm.per_station
            for k, v, sol in prefixes]
    return ordered, prefixes, objs


def planner_select(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> InvestmentPlan:
    ordered, prefixes, objs = _planner_scan(sites, p, cm, settings)
    k = int(np.argmax(objs))
    _, v, sol = prefixes[k]
    return make_plan(ordered.sites[:k], v, sol, cm, objs[k])


def compare_market_vs_planner(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                              settings: SolverSettings = DEFAULT_SETTINGS) -> WelfareReport:
    ordered, prefixes, objs = _planner_scan(sites, p, cm, settings)
    nets = [0.0 if sol is None else sol.pi - k * cm.per_station for k, _, sol in prefixes]
    km, kp = int(np.argmax(nets)), int(np.argmax(objs))
    market = make_plan(ordered.sites[:km], prefixes[km][1], prefixes[km][2], cm, nets[km])
    planner = make_plan(ordered.sites[:kp], prefixes[kp][1], prefixes[kp][2], cm, objs[kp])
    vs = ordered.vs(p)
    ties = nets.count(max(nets)) > 1 or objs.count(max(objs)) > 1
    return WelfareReport(
        market=market, planner=planner,
        cs_market=consumer_surplus(market.v, market.pricing, p),
        cs_planner=consumer_surplus(planner.v, planner.pricing, p),
        sw_market=social_welfare(market.v, market.pricing, p, cm, vs),
        sw_planner=social_welfare(planner.v, planner.pricing, p, cm, vs),
        ties=ties)


def apply_subsidy(p: ChoiceParams, cm: CostModel, sub: SubsidySetting):
    """Re-derive parameters and costs under a subsidy; inputs are not mutated."""
    return (replace(p, pe=p.pe - sub.ev_subsidy),
            replace(cm, f0_capital=cm.f0_capital * (1.0 - sub.capital_subsidy)))


@dataclass(frozen=True)
class SubsidyRow:
    s_e: float
    sigma: float
    eta: float
    n_market: int
    n_planner: int
    pi: float
    s_w: float   # social welfare at the market plan


SUBSIDY_COLUMNS = ("s_e", "sigma", "eta", "n_market", "n_planner", "pi", "s_w")


def subsidy_row(sites: CandidateSet, p: ChoiceParams, cm: CostModel, sub: SubsidySetting,
                settings: SolverSettings = DEFAULT_SETTINGS) -> SubsidyRow:
    ps, cms = apply_subsidy(p, cm, sub)
    rep = compare_market_vs_planner(sites, ps, cms, settings)
    m = rep.market
    eta = m.pricing.eta if m.pricing is not None else float(logit_shares(0.0, 0.0, ps).eta)
    return SubsidyRow(sub.ev_subsidy, sub.capital_subsidy, eta, rep.n_market, rep.n_planner,
                      operational_profit(m.v, m.pricing), rep.sw_market)


def subsidy_sweep(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                  grid: Sequence[SubsidySetting] = DEFAULT_SUBSIDY_GRID,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> list:
    return [subsidy_row(sites, p, cm, sub, settings) for sub in grid]
