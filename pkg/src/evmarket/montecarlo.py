"""Simulated consumers with type I extreme value preference shocks.

Each consumer draws ``eps_E`` and ``eps_G``, buys the vehicle with the larger
utility, and an EV buyer then draws one shock per charging option (home plus
every built station) and picks the best.  The vehicle decision uses the
expected charging utility ``ln(q0 + kappa)``, not the realized maximum.

Samples are processed in fixed-size blocks; block ``b`` draws from a
generator keyed on ``(seed, b)``, so results do not depend on how many worker
threads run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .choice import ChoiceParams
from .errors import DomainError
from .investment import InvestmentPlan
from .pricing import PricingSolution

BLOCK_SIZE = 1 << 16
_U53 = float(1 << 53)


def gumbel(rng: np.random.Generator, size) -> np.ndarray:
    """Standard Gumbel draws by inverse transform on the open interval (0, 1)."""
    u = (rng.integers(0, 1 << 53, size=size, dtype=np.int64) + 0.5) / _U53
    return -np.log(-np.log(u))


@dataclass(frozen=True)
class SimReport:
    n: int
    seed: int
    eta_hat: float
    station_shares_hat: tuple     # (P0, P1..PN) among EV buyers
    std_errs: tuple               # eta first, then one per station share
    n_ev: int
    site_ids: tuple
    site_vs: tuple                # exp(alpha1*f_i - alpha2*c_i) of the simulated sites

    def to_dict(self) -> dict:
        return {"n": self.n, "seed": self.seed, "etaHat": self.eta_hat, "nEV": self.n_ev,
                "stationSharesHat": list(self.station_shares_hat),
                "stdErrs": list(self.std_errs), "siteIds": list(self.site_ids)}


def _block(seed, index, size, vehicle_gap, station_utils):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    eps = gumbel(rng, (size, 2))
    ev = vehicle_gap + eps[:, 0] > eps[:, 1]
    n_ev = int(ev.sum())
    shocks = gumbel(rng, (n_ev, station_utils.size))
    pick = np.argmax(station_utils + shocks, axis=1)
    return n_ev, np.bincount(pick, minlength=station_utils.size)


def simulate_consumers(plan: InvestmentPlan, p: ChoiceParams, n: int, seed: int,
                       workers: int = 1, block_size: int = BLOCK_SIZE) -> SimReport:
    if n < 1:
        raise DomainError("sample count n must be >= 1")
    sites = plan.selected
    station_utils = np.array([p.log_q0] + [p.alpha1 * s.f - p.alpha2 * rho
                                          for s, rho in zip(sites, plan.prices)])
    log_x = float(np.logaddexp.reduce(station_utils))
    v_e = p.beta1 * log_x - p.beta2 * p.pe + p.phi
    v_g = p.beta1 * p.eug - p.beta2 * p.pg + p.phi
    gap = v_e - v_g

    sizes = [min(block_size, n - start) for start in range(0, n, block_size)]
    jobs = [(seed, b, size, gap, station_utils) for b, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _block(*a), jobs))
    else:
        parts = [_block(*a) for a in jobs]

    n_ev = sum(k for k, _ in parts)
    counts = np.sum([c for _, c in parts], axis=0)
    eta_hat = n_ev / n
    shares = counts / n_ev if n_ev else np.full(station_utils.size, math.nan)
    errs = [math.sqrt(eta_hat * (1 - eta_hat) / n)]
    errs += [math.sqrt(s * (1 - s) / n_ev) if n_ev else math.nan for s in shares]
    vs = tuple(math.exp(p.alpha1 * s.f - p.alpha2 * s.c) for s in sites)
    return SimReport(n, seed, eta_hat, tuple(float(s) for s in shares), tuple(errs), n_ev,
                     plan.selected_ids, vs)


@dataclass(frozen=True)
class Check:
    name: str
    estimate: float
    expected: float
    std_err: float
    z: float
    passed: bool


def _check(name, est, expected, n, z):
    se = math.sqrt(max(expected * (1 - expected), 0.0) / n) if n else math.nan
    dev = abs(est - expected)
    passed = math.isinf(z) or dev == 0 or dev <= z * se
    return Check(name, est, expected, se, z, passed)


def validate_frequencies(sim: SimReport, eta: float, shares: Sequence[float],
                         z: float = 4.0) -> list:
    """Flag every simulated frequency more than ``z`` binomial standard errors
    away from its expected probability (standard error under the expectation)."""
    if len(shares) != len(sim.station_shares_hat):
        raise DomainError(f"expected {len(sim.station_shares_hat)} station shares, "
                          f"got {len(shares)}")
    checks = [_check("eta", sim.eta_hat, eta, sim.n, z)]
    names = ["P0"] + [f"P[{sid}]" for sid in sim.site_ids]
    for name, est, exp in zip(names, sim.station_shares_hat, shares):
        checks.append(_check(name, est, exp, sim.n_ev, z))
    return checks


def validate_closed_form(sim: SimReport, analytic: PricingSolution, z: float = 4.0,
                         eta: float | None = None) -> list:
    """Compare a simulation with an equilibrium pricing solution.

    Station shares are ``P0`` and ``1 - P0`` split in proportion to each
    site's ``v_i``.  ``eta`` overrides ``analytic.eta`` (used to probe power).
    """
    if len(sim.station_shares_hat) != len(sim.site_vs) + 1:
        raise DomainError("simulated shares and site list have different lengths")
    total = math.fsum(sim.site_vs)
    if not math.isclose(total, analytic.v, rel_tol=1e-9):
        raise DomainError(
            f"scenario mismatch: simulated sites sum to v={total!r}, solution has v={analytic.v!r}")
    shares = [analytic.p0] + [analytic.station_share_sum * vi / total for vi in sim.site_vs]
    return validate_frequencies(sim, analytic.eta if eta is None else eta, shares, z)


def closed_form_frequencies(sites: Sequence, prices: Sequence[float], p: ChoiceParams):
    """Closed-form (eta, (P0, P1..PN)) for an arbitrary price vector."""
    utils = np.array([p.log_q0] + [p.alpha1 * s.f - p.alpha2 * rho for s, rho in zip(sites, prices)])
    log_x = float(np.logaddexp.reduce(utils))
    eta = 1.0 / (1.0 + math.exp(p.log_c - p.beta1 * log_x))
    return eta, tuple(np.exp(utils - log_x))
