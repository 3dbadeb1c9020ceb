"""Optimal uniform-profit charging price and its derivative machinery.

At the investor optimum every built station earns the same margin
``r = rho_i - c_i``.  That margin is the root in ``r`` of

    g(v, r) = alpha2*beta1*r*(1 - eta)*(1 - P0) + alpha2*r*P0 - 1

which is ``-r * d ln(Pi)/dr`` for the operational profit
``Pi = r * eta * (1 - P0)``.  Writing ``N = beta1*(1-eta)*(1-P0) + P0`` and

    H = alpha2*r*[beta1**2*eta*(1-eta)*(1-P0)**2
                  - beta1*(1-eta)*P0*(1-P0) + P0*(1-P0)]

the partial derivatives are ``dg/dr = alpha2*(N + H)`` and ``dg/dv = -H/v``,
so the implicit-function slope is ``dr/dv = 1/(alpha2*v*(1 + h))`` with
``h = N/H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .choice import ChoiceParams, Site, logit_shares
from .errors import DegeneracyError, DomainError, NumericRangeError, SolverError

MAX_BISECTION_STEPS = 400


@dataclass(frozen=True)
class SolverSettings:
    grid_base: float = 2.0
    max_bracket_exp: int = 128
    tol_abs: float = 1e-12
    fd_rel_step: float = 1e-4

    def __post_init__(self):
        if not (self.grid_base > 1 and self.max_bracket_exp > 0
                and self.tol_abs > 0 and self.fd_rel_step > 0):
            raise DomainError("solver settings must be positive (grid_base > 1)")


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class PricingSolution:
    v: float
    r: float
    kappa: float
    eta: float
    p0: float
    station_share_sum: float
    pi: float
    h: float
    drdv: float
    foc_residual: float


class _FocTerms(NamedTuple):
    g: np.ndarray
    n: np.ndarray
    h_den: np.ndarray
    shares: object


def _foc_terms(v, r, p: ChoiceParams) -> _FocTerms:
    sh = logit_shares(v, r, p)
    b1 = p.beta1
    a2r = p.alpha2 * np.asarray(r, dtype=float)
    n = b1 * sh.one_minus_eta * sh.station + sh.p0
    h_den = a2r * (b1 * b1 * sh.eta * sh.one_minus_eta * sh.station ** 2
                   - b1 * sh.one_minus_eta * sh.p0 * sh.station
                   + sh.p0 * sh.station)
    return _FocTerms(a2r * n - 1.0, n, h_den, sh)


def foc_residual(v, r, p: ChoiceParams):
    """First-order condition ``g(v, r)``; zero at the optimal uniform profit."""
    g = _foc_terms(v, r, p).g
    if not np.all(np.isfinite(g)):
        raise NumericRangeError(f"non-finite FOC residual at v={v!r}, r={r!r}")
    return float(g) if np.ndim(g) == 0 else g


def _profit(v, r, p):
    sh = logit_shares(v, r, p)
    return np.asarray(r) * sh.eta * sh.station


def solve_many(v, p: ChoiceParams, settings: SolverSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Optimal uniform profit for every entry of ``v`` (all > 0).

    Roots lie in ``[r_lo, r_hi]`` with ``r_lo = 1/(alpha2*max(beta1, 1))`` and
    ``r_hi = 1/(alpha2*min(beta1*(1 - eta(r=0)), 1))``; ``g`` is negative at
    ``r_lo`` and positive past ``r_hi``.  The interval is scanned on the
    geometric grid ``r_lo * base**j``, every sign change is bisected and
    Newton-polished, and the root with the largest profit wins (smaller ``r``
    on exact ties).
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size == 0:
        return v.copy()
    if np.any(~(v > 0)) or np.any(~np.isfinite(v)):
        raise DomainError("pricing requires finite v > 0")

    a2, b1, base = p.alpha2, p.beta1, settings.grid_base
    r_lo = 1.0 / (a2 * max(b1, 1.0))
    m = np.minimum(b1 * logit_shares(v, 0.0, p).one_minus_eta, 1.0)
    with np.errstate(divide="ignore"):
        span = np.max(1.0 / (a2 * m)) / r_lo
    n_steps = settings.max_bracket_exp
    if np.isfinite(span):
        n_steps = min(n_steps, int(math.ceil(math.log(span) / math.log(base))) + 1)
    grid = r_lo * base ** np.arange(n_steps + 1, dtype=float)

    gmat = _foc_terms(v[:, None], grid[None, :], p).g
    neg = gmat < 0
    change = neg[:, :-1] != neg[:, 1:]
    missing = ~change.any(axis=1)
    if missing.any():
        i = int(np.flatnonzero(missing)[0])
        trace = list(zip(grid.tolist(), gmat[i].tolist()))
        raise SolverError(
            f"no sign change of the FOC within {n_steps} grid steps at v={v[i]!r}", trace)

    rows, cols = np.nonzero(change)
    lo, hi = grid[cols].copy(), grid[cols + 1].copy()
    vv = v[rows]
    lo_neg = neg[rows, cols]
    for _ in range(MAX_BISECTION_STEPS):
        open_ = (hi - lo) > 1e-12 * np.maximum(1.0, lo)
        if not open_.any():
            break
        mid = 0.5 * (lo + hi)
        mid_neg = _foc_terms(vv, mid, p).g < 0
        go_right = mid_neg == lo_neg
        lo = np.where(open_ & go_right, mid, lo)
        hi = np.where(open_ & ~go_right, mid, hi)

    r = 0.5 * (lo + hi)
    t = _foc_terms(vv, r, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = t.g / (a2 * (t.n + t.h_den))
    cand = r - np.where(np.isfinite(step), step, 0.0)
    better = np.abs(_foc_terms(vv, cand, p).g) < np.abs(t.g)
    r = np.where(better, cand, r)

    prof = _profit(vv, r, p)
    order = np.lexsort((r, -prof, rows))
    first = np.ones(order.size, dtype=bool)
    first[1:] = rows[order][1:] != rows[order][:-1]
    best = order[first]
    return r[best]


def _solution(v: float, r: float, p: ChoiceParams) -> PricingSolution:
    t = _foc_terms(v, r, p)
    sh = t.shares
    n, hd = float(t.n), float(t.h_den)
    h = n / hd if hd != 0.0 else math.copysign(math.inf, n)
    return PricingSolution(
        v=float(v), r=float(r), kappa=float(sh.kappa), eta=float(sh.eta), p0=float(sh.p0),
        station_share_sum=float(sh.station), pi=float(r * sh.eta * sh.station),
        h=h, drdv=hd / (p.alpha2 * v * (n + hd)), foc_residual=float(t.g))


def solve_uniform_profit(v: float, p: ChoiceParams,
                         settings: SolverSettings = DEFAULT_SETTINGS) -> PricingSolution:
    r = float(solve_many([v], p, settings)[0])
    sol = _solution(v, r, p)
    if not abs(sol.foc_residual) <= settings.tol_abs:
        raise SolverError(
            f"FOC residual {sol.foc_residual:.3e} above tolerance at v={v!r}, r={r!r}")
    return sol


def price_vector(selected: Sequence[Site], r: float) -> list:
    if r < 0:
        raise DomainError("uniform profit must be non-negative")
    return [s.c + r for s in selected]


def profit_derivative(v: float, sol: PricingSolution, p: ChoiceParams):
    """Return ``(h, dr/dv)`` at a solved equilibrium.

    Raises :class:`DegeneracyError` when the denominator ``H`` of ``h`` is not
    positive, i.e. in the small-``v`` regime where ``h > 0`` is not yet
    guaranteed.
    """
    t = _foc_terms(v, sol.r, p)
    hd = float(t.h_den)
    if not hd > 0:
        raise DegeneracyError(f"H = {hd:.6g} <= 0 at v={v!r}")
    h = float(t.n) / hd
    return h, 1.0 / (p.alpha2 * v * (1.0 + h))


def operational_profit(v: float, sol: PricingSolution | None) -> float:
    if v == 0 or sol is None:
        return 0.0
    return sol.r * sol.eta * sol.station_share_sum


def operational_profit_at_prices(sites: Sequence[Site], prices: Sequence[float],
                                 p: ChoiceParams) -> float:
    """Total operational profit for an arbitrary (not necessarily uniform) price vector."""
    logs = np.array([p.alpha1 * s.f - p.alpha2 * rho for s, rho in zip(sites, prices)])
    margins = np.array([rho - s.c for s, rho in zip(sites, prices)])
    top = max(logs.max(), p.log_q0)
    w = np.exp(logs - top)
    denom = w.sum() + math.exp(p.log_q0 - top)
    log_x = top + math.log(denom)
    eta = 1.0 / (1.0 + math.exp(p.log_c - p.beta1 * log_x))
    return float(eta * np.dot(margins, w) / denom)


def profit_gradient(v: float, p: ChoiceParams,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """``dPi/dv`` by the chain rule through ``r(v)`` and ``kappa(v)``."""
    sol = solve_uniform_profit(v, p, settings)
    x = sol.kappa + math.exp(p.log_q0)
    s = sol.station_share_sum
    deta_dk = p.beta1 * sol.eta * (1.0 - sol.eta) / x
    ds_dk = sol.p0 / x
    dk_dv = (sol.kappa / v) * (1.0 - p.alpha2 * v * sol.drdv)
    return sol.drdv * sol.eta * s + sol.r * (deta_dk * s + sol.eta * ds_dk) * dk_dv


def r_second_derivative(v: float, p: ChoiceParams,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """``d2r/dv2`` by central difference of the analytic slope."""
    dv = v * settings.fd_rel_step
    up = solve_uniform_profit(v + dv, p, settings).drdv
    dn = solve_uniform_profit(v - dv, p, settings).drdv
    return (up - dn) / (2.0 * dv)


def profit_second_derivative(v: float, p: ChoiceParams,
                             settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """``d2Pi/dv2`` in closed form.

    With ``D = alpha2*v*dr/dv = 1/(1 + h)`` and ``S = 1 - P0``:

        Pi'' = eta*S/(alpha2*v**2) * {2*D*(1-D)*N
                                      + (1-D)**2*[S*(beta1*(1-eta) - 1) - H]
                                      - D*(2-D)}

    The ``d2r/dv2`` contribution is absent: its coefficient is
    ``S*(1 - alpha2*r*N)``, which the first-order condition sets to zero.
    """
    sol = solve_uniform_profit(v, p, settings)
    t = _foc_terms(v, sol.r, p)
    n, hd = float(t.n), float(t.h_den)
    d = hd / (n + hd)
    s, eta = sol.station_share_sum, sol.eta
    bracket = (2.0 * d * (1.0 - d) * n
               + (1.0 - d) ** 2 * (s * (p.beta1 * (1.0 - eta) - 1.0) - hd)
               - d * (2.0 - d))
    return eta * s / (p.alpha2 * v * v) * bracket


@dataclass(frozen=True)
class DiagnosticRow:
    v: float
    r: float
    r_over_lnv: float
    a2_v_drdv: float
    h: float
    eta: float
    p0: float


DIAGNOSTIC_COLUMNS = ("v", "r", "r_over_lnv", "a2_v_drdv", "h", "eta", "p0")
DEFAULT_V_GRID = tuple(10.0 ** k for k in range(2, 13, 2))


def asymptotic_diagnostics(v_grid: Sequence[float] = DEFAULT_V_GRID, p: ChoiceParams = None,
                           settings: SolverSettings = DEFAULT_SETTINGS) -> list:
    grid = [float(x) for x in v_grid]
    if any(x <= 1 for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("v grid must be strictly increasing with every point > 1")
    rows = []
    for v in grid:
        sol = solve_uniform_profit(v, p, settings)
        rows.append(DiagnosticRow(v=v, r=sol.r, r_over_lnv=sol.r / math.log(v),
                                  a2_v_drdv=p.alpha2 * v * sol.drdv, h=sol.h,
                                  eta=sol.eta, p0=sol.p0))
    return rows


def h_threshold(rows: Sequence[DiagnosticRow]):
    """Smallest grid ``v`` from which ``h`` stays positive, or None."""
    found = None
    for row in reversed(rows):
        if row.h > 0:
            found = row.v
        else:
            break
    return found
