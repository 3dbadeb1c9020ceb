"""Consumer side of the market: parameters, candidate sites and logit shares.

Every closed form here is written in terms of the exponential systematic
utility of the station nest.  With ``kappa = v * exp(-alpha2 * r)`` the
home-charging share is ``q0 / (q0 + kappa)`` and the EV market share is

    eta = (q0 + kappa)**beta1 / ((q0 + kappa)**beta1 + C)

The power is never formed directly; ``eta`` is evaluated as a logistic
function of ``beta1 * ln(q0 + kappa) - ln C`` so that huge station masses do
not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from .errors import DomainError, NumericRangeError, ValidationError


def _require(cond, rule):
    if not cond:
        raise ValidationError(f"parameter invariant violated: {rule}")


@dataclass(frozen=True)
class ChoiceParams:
    """Logit coefficients and outside-option attributes.

    Attributes
    ----------
    alpha1, alpha2 : float
        Charging utility per favorability unit and per unit of charging price.
    beta1, beta2 : float
        Weight on expected charging utility and utility per unit vehicle price.
    phi : float
        Utility of owning a vehicle.
    f0, rho0 : float
        Favorability and price of home charging.
    eug : float
        Expected fueling utility of a gasoline vehicle.  Must be stated
        without the Euler-Mascheroni constant, matching the charging nest.
    pg, pe : float
        Gasoline vehicle and EV purchase prices.
    """

    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    phi: float = 0.0
    f0: float = 0.0
    rho0: float = 0.0
    eug: float = 0.0
    pg: float = 0.0
    pe: float = 0.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2", "phi", "f0", "rho0", "eug", "pg", "pe"):
            _require(math.isfinite(getattr(self, name)), f"{name} is finite")
        _require(self.alpha2 > 0, "alpha2 > 0")
        _require(self.beta1 > 0, "beta1 > 0")
        for name in ("log_q0", "log_c", "log_c1", "log_c2"):
            val = getattr(self, name)
            _require(abs(val) < 700.0, f"exp({name[4:]}) is finite and > 0")

    @classmethod
    def from_constants(cls, alpha2, beta1, q0, c, alpha1=1.0, beta2=1.0, phi=0.0):
        """Build parameters that reproduce the given ``q0`` and ``C``."""
        if q0 <= 0 or c <= 0:
            raise ValidationError("q0 > 0 and C > 0 required")
        return cls(alpha1=alpha1, alpha2=alpha2, beta1=beta1, beta2=beta2, phi=phi,
                   f0=math.log(q0) / alpha1, rho0=0.0, eug=math.log(c) / beta1,
                   pg=0.0, pe=0.0)

    @property
    def log_q0(self) -> float:
        return self.alpha1 * self.f0 - self.alpha2 * self.rho0

    @property
    def log_c(self) -> float:
        return self.beta1 * self.eug - self.beta2 * self.pg + self.beta2 * self.pe

    @property
    def log_c1(self) -> float:
        return self.phi - self.beta2 * self.pe

    @property
    def log_c2(self) -> float:
        return self.phi + self.beta1 * self.eug - self.beta2 * self.pg

    @property
    def q0(self) -> float:
        return math.exp(self.log_q0)

    @property
    def C(self) -> float:
        return math.exp(self.log_c)

    @property
    def C1(self) -> float:
        return math.exp(self.log_c1)

    @property
    def C2(self) -> float:
        return math.exp(self.log_c2)


@dataclass(frozen=True)
class Site:
    id: str
    f: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.f) and math.isfinite(self.c)):
            raise ValidationError(f"site {self.id!r}: f and c must be finite")


@dataclass(frozen=True)
class CandidateSet:
    """Candidate station sites, kept in input order.

    ``sorted_by_v`` gives the normalized view used by every selection
    routine: descending exponential systematic utility, ties broken by id.
    """

    sites: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"site ids must be unique; duplicated: {dup}")

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def sorted_by_v(self, p: ChoiceParams) -> "CandidateSet":
        keyed = [(-exp_systematic_utility(s, p), s.id, s) for s in self.sites]
        keyed.sort(key=lambda t: (t[0], t[1]))
        return CandidateSet(tuple(t[2] for t in keyed))

    def vs(self, p: ChoiceParams) -> np.ndarray:
        return np.array([exp_systematic_utility(s, p) for s in self.sites], dtype=float)


class Shares(NamedTuple):
    """Logit quantities at a given station mass and uniform profit."""

    kappa: np.ndarray
    p0: np.ndarray           # home-charging share among EV owners
    station: np.ndarray      # 1 - p0, computed without cancellation
    eta: np.ndarray
    one_minus_eta: np.ndarray
    log_x: np.ndarray        # ln(q0 + kappa)


def exp_systematic_utility(site: Site, p: ChoiceParams) -> float:
    expo = p.alpha1 * site.f - p.alpha2 * site.c
    try:
        val = math.exp(expo)
    except OverflowError:
        val = math.inf
    if not math.isfinite(val) or val <= 0.0:
        raise NumericRangeError(
            f"site {site.id!r}: exp({expo:.6g}) is outside the floating point range")
    return val


def aggregate_v(sites: Iterable[Site], p: ChoiceParams) -> float:
    return math.fsum(exp_systematic_utility(s, p) for s in sites)


def kappa(v, r, p: ChoiceParams):
    """Station mass after pricing, ``v * exp(-alpha2 * r)``."""
    out = np.asarray(v, dtype=float) * np.exp(-p.alpha2 * np.asarray(r, dtype=float))
    return float(out) if out.ndim == 0 else out


def logit_shares(v, r, p: ChoiceParams) -> Shares:
    """Vectorized evaluation of every share at aggregate utility ``v``.

    ``v`` may be zero (no stations); everything is computed from
    ``ln kappa = ln v - alpha2 * r`` so that large ``v`` and ``r`` stay exact.
    """
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        log_k = np.log(v) - p.alpha2 * r
    log_x = np.logaddexp(p.log_q0, log_k)
    z = p.beta1 * log_x - p.log_c
    return Shares(
        kappa=np.exp(log_k),
        p0=np.exp(p.log_q0 - log_x),
        station=np.exp(log_k - log_x),
        eta=expit(z),
        one_minus_eta=expit(-z),
        log_x=log_x,
    )


def station_choice_probs(q0: float, station_vs: Sequence[float], r: float,
                         p: ChoiceParams) -> np.ndarray:
    """Choice probabilities over (home, station 1, ..., station N) for an EV owner."""
    if q0 <= 0:
        raise DomainError("q0 must be positive")
    vs = np.asarray(station_vs, dtype=float)
    if np.any(vs <= 0):
        raise DomainError("station utilities v_i must be positive")
    # shift by the largest log-utility; results are ratios
    logs = np.concatenate(([math.log(q0)], np.log(vs) - p.alpha2 * r))
    w = np.exp(logs - logs.max())
    probs = w / w.sum()
    if not np.all(np.isfinite(probs)):
        raise NumericRangeError("non-finite choice probability")
    return probs


def ev_market_share(v: float, r: float, p: ChoiceParams) -> float:
    return float(logit_shares(v, r, p).eta)


def expected_max_charging_utility(q0: float, kappa_: float, p: ChoiceParams | None = None) -> float:
    """Inclusive value ``ln(q0 + kappa)`` of the charging nest.

    The Euler-Mascheroni constant is left out; any common constant is
    absorbed into ``C``.
    """
    if q0 <= 0:
        raise DomainError("q0 must be positive")
    return math.log(q0 + kappa_)
