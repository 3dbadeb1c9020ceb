"""Station siting: capital cost model, greedy prefix scan and a subset oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .choice import CandidateSet, ChoiceParams, Site, logit_shares
from .errors import DomainError, EnumerationLimitError, SolverError, ValidationError
from .pricing import (DEFAULT_SETTINGS, PricingSolution, SolverSettings, price_vector,
                      solve_many, solve_uniform_profit)

ENUMERATION_GUARD = 20
_CHUNK = 8192


@dataclass(frozen=True)
class CostModel:
    """Homogeneous capital cost ``(1 + gamma) * f0_capital`` per station."""

    f0_capital: float
    gamma: float = 0.0
    budget: float = math.inf

    def __post_init__(self):
        if not (self.f0_capital > 0 and math.isfinite(self.f0_capital)):
            raise ValidationError("cost invariant violated: f0Capital > 0")
        if not self.gamma >= 0:
            raise ValidationError("cost invariant violated: gamma >= 0")
        if not self.budget >= 0:
            raise ValidationError("cost invariant violated: budget >= 0")

    @property
    def per_station(self) -> float:
        return (1.0 + self.gamma) * self.f0_capital

    def max_stations(self, n_candidates: int) -> int:
        if math.isinf(self.budget):
            return n_candidates
        # budgets that are exact multiples of the cost must not lose a station to rounding
        cap = self.budget * (1.0 + 1e-12)
        k = int(cap // self.per_station)
        while k > 0 and k * self.per_station > cap:
            k -= 1
        return min(n_candidates, k)


@dataclass(frozen=True)
class InvestmentPlan:
    selected: tuple
    v: float
    pricing: Optional[PricingSolution]
    prices: tuple
    capital_cost: float
    net_profit: float
    deferred: bool
    objective: float = 0.0   # value the selection routine maximized

    @property
    def selected_ids(self) -> tuple:
        return tuple(s.id for s in self.selected)

    @property
    def n_stations(self) -> int:
        return len(self.selected)

    def to_dict(self) -> dict:
        return {
            "selectedIds": list(self.selected_ids),
            "nStations": self.n_stations,
            "v": self.v,
            "r": None if self.pricing is None else self.pricing.r,
            "pi": 0.0 if self.pricing is None else self.pricing.pi,
            "prices": list(self.prices),
            "capitalCost": self.capital_cost,
            "netProfit": self.net_profit,
            "deferred": self.deferred,
        }


def make_plan(selected: Sequence[Site], v: float, sol: Optional[PricingSolution],
              cm: CostModel, objective: float = 0.0) -> InvestmentPlan:
    if not selected:
        return InvestmentPlan((), 0.0, None, (), 0.0, 0.0, True, objective)
    cost = len(selected) * cm.per_station
    return InvestmentPlan(tuple(selected), v, sol, tuple(price_vector(selected, sol.r)),
                          cost, sol.pi - cost, False, objective)


def net_profit(plan: InvestmentPlan) -> float:
    if plan.deferred:
        return 0.0
    return plan.pricing.pi - plan.capital_cost


def piecewise_cost(v: float, sorted_vs: Sequence[float], cm: CostModel) -> float:
    """Convex piecewise-linear interpolation of capital cost over aggregate utility.

    Breakpoints are the prefix sums of ``sorted_vs`` (descending); on the
    segment that adds site ``N+1`` the slope is ``per_station / v_{N+1}``.
    """
    vs = np.asarray(sorted_vs, dtype=float)
    if np.any(np.diff(vs) > 0):
        raise DomainError("sites must be sorted by v_i descending")
    cum = np.concatenate(([0.0], np.cumsum(vs)))
    if v < 0 or v > cum[-1] * (1 + 1e-12):
        raise DomainError(f"v={v!r} outside [0, {cum[-1]!r}]")
    hit = np.flatnonzero(cum == v)
    if hit.size:
        return float(cm.per_station * hit[0])
    n = int(np.searchsorted(cum, v, side="left")) - 1
    n = min(max(n, 0), len(vs) - 1)
    return float(cm.per_station * n + (v - cum[n]) * cm.per_station / vs[n])


def prefix_candidates(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                      settings: SolverSettings = DEFAULT_SETTINGS):
    """Solve pricing on every affordable v-descending prefix.

    Returns the sorted sites and a list of ``(k, v_k, solution)`` with the
    empty prefix as ``(0, 0.0, None)``.
    """
    ordered = sites.sorted_by_v(p)
    vs = ordered.vs(p)
    cum = np.cumsum(vs)
    out = [(0, 0.0, None)]
    for k in range(1, cm.max_stations(len(ordered)) + 1):
        v_k = float(cum[k - 1])
        try:
            sol = solve_uniform_profit(v_k, p, settings)
        except SolverError as exc:
            raise SolverError(f"pricing failed for the {k}-station prefix: {exc}",
                              exc.trace) from exc
        out.append((k, v_k, sol))
    return ordered, out


def greedy_select(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> InvestmentPlan:
    ordered, prefixes = prefix_candidates(sites, p, cm, settings)
    nets = [0.0 if sol is None else sol.pi - k * cm.per_station for k, _, sol in prefixes]
    k = int(np.argmax(nets))
    _, v_k, sol = prefixes[k]
    return make_plan(ordered.sites[:k], v_k, sol, cm, nets[k])


def brute_force_select(sites: CandidateSet, p: ChoiceParams, cm: CostModel,
                       settings: SolverSettings = DEFAULT_SETTINGS,
                       guard: int = ENUMERATION_GUARD) -> InvestmentPlan:
    """Exhaustive search over every affordable subset.

    Ties go to fewer stations, then to the lexicographically smallest sorted
    id tuple.
    """
    n = len(sites)
    if n > guard:
        raise EnumerationLimitError(
            f"{n} candidates exceed the enumeration guard of {guard}; "
            "use greedy_select or raise the guard explicitly")
    ordered = sites.sorted_by_v(p)
    vs = ordered.vs(p)
    # subset sums built in index order so prefix masks reproduce np.cumsum exactly
    sums = np.zeros(1)
    counts = np.zeros(1, dtype=np.int64)
    for vi in vs:
        sums = np.concatenate((sums, sums + vi))
        counts = np.concatenate((counts, counts + 1))
    masks = np.arange(sums.size)
    keep = (counts >= 1) & (counts <= cm.max_stations(n))
    masks, sums, counts = masks[keep], sums[keep], counts[keep]

    pis = np.empty_like(sums)
    rs = np.empty_like(sums)
    for start in range(0, sums.size, _CHUNK):
        chunk = sums[start:start + _CHUNK]
        r = solve_many(chunk, p, settings)
        rs[start:start + _CHUNK] = r
        pis[start:start + _CHUNK] = _pi(chunk, r, p)
    nets = pis - counts * cm.per_station

    best_net, best = 0.0, None
    if nets.size:
        top = nets.max()
        if top > 0:
            tied = np.flatnonzero(nets == top)
            tied = tied[counts[tied] == counts[tied].min()]
            keyed = [(tuple(sorted(ordered.sites[i].id for i in _bits(masks[j]))), j)
                     for j in tied]
            best = min(keyed)[1]
            best_net = float(top)
    if best is None:
        return make_plan((), 0.0, None, cm, 0.0)
    chosen = [ordered.sites[i] for i in _bits(masks[best])]
    v = float(sums[best])
    sol = solve_uniform_profit(v, p, settings)
    return make_plan(chosen, v, sol, cm, best_net)


def _pi(v, r, p):
    sh = logit_shares(v, r, p)
    return r * sh.eta * sh.station


def _bits(mask):
    mask = int(mask)
    return [i for i in range(mask.bit_length()) if mask >> i & 1]
