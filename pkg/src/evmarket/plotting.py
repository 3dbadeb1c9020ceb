"""Figures for the command line reports.

Every function takes the already-computed payload pieces, draws one figure
and writes it to ``path``.  The Agg backend is forced so that nothing here
needs a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .choice import logit_shares  # noqa: E402
from .investment import piecewise_cost  # noqa: E402
from .pricing import solve_many  # noqa: E402

COLW = 3.45
COLORS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"]

matplotlib.rcParams.update({
    "font.size": 9,
    "axes.linewidth": 0.6,
    "legend.frameon": False,
    "savefig.dpi": 150,
})


def _figure(ncols=1, aspect=0.618, nrows=1):
    fig, axes = plt.subplots(nrows, ncols, figsize=(ncols * COLW * 1.3, nrows * COLW * 1.3 * aspect))
    return fig, axes


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_price_curve(v, r_star, p, path):
    """Operational profit against the uniform margin at fixed ``v``."""
    r = np.linspace(0.0, 3.0 * r_star, 400)[1:]
    sh = logit_shares(v, r, p)
    fig, ax = _figure()
    ax.plot(r, r * sh.eta * sh.station, color=COLORS[0], label=r"$\Pi(r)$")
    ax.axvline(r_star, color=COLORS[1], ls="--", lw=0.8, label=r"$r^*$")
    ax.set_xlabel("uniform profit r")
    ax.set_ylabel("operational profit")
    ax.legend()
    _save(fig, path)


def plot_investment(sorted_vs, p, cm, path, v_market=None, v_planner=None, settings=None):
    """Profit, capital cost and welfare along aggregate utility, with marginal curves."""
    cum = np.cumsum(sorted_vs)
    if cum.size == 0:
        fig, ax = _figure()
        ax.text(0.5, 0.5, "no candidate sites", ha="center", transform=ax.transAxes)
        _save(fig, path)
        return
    v = np.linspace(cum[-1] * 1e-3, cum[-1], 300)
    kw = {} if settings is None else {"settings": settings}
    r = solve_many(v, p, **kw)
    sh = logit_shares(v, r, p)
    pi = r * sh.eta * sh.station
    cost = np.array([piecewise_cost(x, sorted_vs, cm) for x in v])
    cs = np.logaddexp(p.beta1 * sh.log_x + p.log_c1, p.log_c2)
    cs0 = float(np.logaddexp(p.beta1 * p.log_q0 + p.log_c1, p.log_c2))

    fig, (a, b) = _figure(ncols=2)
    a.plot(v, pi, color=COLORS[0], label=r"$\Pi(v)$")
    a.plot(v, cost, color=COLORS[1], label=r"$\tilde F(v)$")
    a.plot(v, cs - cs0 + pi, color=COLORS[2], label=r"$\bar S_W(v) - \bar S_W(0)$")
    for x in cum:
        a.axvline(x, color="0.8", lw=0.5)
    b.plot(v, np.gradient(pi, v), color=COLORS[0], label=r"$\partial\Pi/\partial v$")
    b.plot(v, np.gradient(cs + pi, v), color=COLORS[2], label=r"$\partial\bar S_W/\partial v$")
    b.step(v, np.gradient(cost, v), where="mid", color=COLORS[1], label=r"$\partial\tilde F/\partial v$")
    for ax_ in (a, b):
        if v_market:
            ax_.axvline(v_market, color=COLORS[3], ls="--", lw=0.8, label=r"$v^*$")
        if v_planner:
            ax_.axvline(v_planner, color=COLORS[4], ls=":", lw=0.8, label=r"$v^{**}$")
        ax_.set_xlabel("aggregate utility v")
        ax_.legend(fontsize=7)
    b.set_yscale("log")
    _save(fig, path)


def plot_asymptotics(rows, alpha2, path):
    v = np.array([row.v for row in rows])
    fig, (a, b) = _figure(ncols=2)
    a.semilogx(v, [alpha2 * row.r_over_lnv for row in rows], "o-", color=COLORS[0],
               label=r"$\alpha_2 r/\ln v$")
    a.semilogx(v, [row.a2_v_drdv for row in rows], "s-", color=COLORS[1],
               label=r"$\alpha_2 v\, dr/dv$")
    a.axhline(1.0, color="0.6", lw=0.6)
    a.set_xlabel("v")
    a.legend()
    b.loglog(v, [1.0 - row.eta for row in rows], "o-", color=COLORS[2], label=r"$1-\eta$")
    b.loglog(v, [row.p0 for row in rows], "s-", color=COLORS[3], label=r"$P_0$")
    b.set_xlabel("v")
    b.legend()
    _save(fig, path)


def plot_subsidy(rows, path):
    sigmas = sorted({row.sigma for row in rows})
    fig, (a, b) = _figure(ncols=2)
    for i, sg in enumerate(sigmas):
        sel = sorted((row for row in rows if row.sigma == sg), key=lambda row: row.s_e)
        a.plot([row.s_e for row in sel], [row.eta for row in sel], "o-",
               color=COLORS[i % len(COLORS)], label=f"capital subsidy {sg:g}")
    a.set_xlabel("EV subsidy")
    a.set_ylabel("EV market share")
    a.legend(fontsize=7)
    s_es = sorted({row.s_e for row in rows})
    for i, se in enumerate(s_es):
        sel = sorted((row for row in rows if row.s_e == se), key=lambda row: row.sigma)
        b.plot([row.sigma for row in sel], [row.n_market for row in sel], "o-",
               color=COLORS[i % len(COLORS)], label=f"market, EV subsidy {se:g}")
        b.plot([row.sigma for row in sel], [row.n_planner for row in sel], "x--",
               color=COLORS[i % len(COLORS)])
    b.set_xlabel("capital subsidy fraction")
    b.set_ylabel("stations (o market, x planner)")
    _save(fig, path)


def plot_simulation(checks, path):
    names = [c.name for c in checks]
    x = np.arange(len(names))
    fig, ax = _figure()
    ax.bar(x - 0.2, [c.expected for c in checks], 0.4, color=COLORS[0], label="closed form")
    ax.bar(x + 0.2, [c.estimate for c in checks], 0.4, color=COLORS[1], label="simulated",
           yerr=[c.z * c.std_err for c in checks])
    ax.set_xticks(x)
    ax.set_xticklabels(names, fontsize=7)
    ax.legend()
    _save(fig, path)
