"""Command line front end.

    evmarket <command> --scenario PATH [--seed N] [--samples N] [--oracle]
                       [--format json|csv] [--out PATH] [--plot PATH]

Commands: price, invest, planner, welfare, subsidy, simulate, asymptote.
``subsidy`` and ``asymptote`` are tabular and may be written as CSV; every
command can be written as JSON.  ``--plot`` renders a PNG figure of the same
result.  Errors print one line ``error: <CODE>: <message>`` to stderr and exit
with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import DomainError, ModelError
from .investment import ENUMERATION_GUARD, brute_force_select, greedy_select
from .montecarlo import closed_form_frequencies, simulate_consumers, validate_frequencies
from .pricing import DEFAULT_V_GRID, DIAGNOSTIC_COLUMNS, asymptotic_diagnostics, h_threshold, \
    price_vector, solve_uniform_profit
from .scenario import Scenario, load_scenario
from .welfare import DEFAULT_SUBSIDY_GRID, SUBSIDY_COLUMNS, compare_market_vs_planner, \
    subsidy_sweep

COMMANDS = ("price", "invest", "planner", "welfare", "subsidy", "simulate", "asymptote")
TABULAR = {"subsidy": SUBSIDY_COLUMNS, "asymptote": DIAGNOSTIC_COLUMNS}
DEFAULT_SAMPLES = 1_000_000


@dataclass(frozen=True)
class Report:
    command: str
    flags: dict
    scenario_digest: str
    result: dict
    version: str = __version__

    def to_dict(self) -> dict:
        return {"command": self.command, "flags": self.flags,
                "scenarioDigest": self.scenario_digest, "version": self.version,
                "result": self.result}


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    return _finite(obj)


def _pricing_dict(sol):
    return {"v": sol.v, "r": sol.r, "kappa": sol.kappa, "eta": sol.eta, "p0": sol.p0,
            "stationShareSum": sol.station_share_sum, "pi": sol.pi, "h": sol.h,
            "drdv": sol.drdv, "focResidual": sol.foc_residual}


def run_command(cmd: str, scenario: Scenario, seed: int = 0, samples: int = DEFAULT_SAMPLES,
                oracle: bool = False, plot=None) -> Report:
    if cmd not in COMMANDS:
        raise DomainError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    p, cm = scenario.effective()
    settings = scenario.solver
    sites = scenario.sites
    flags = {"seed": seed, "samples": samples, "oracle": oracle}

    if cmd == "price":
        v = sum(sites.vs(p)) if len(sites) else 0.0
        if not v > 0:
            raise DomainError("price needs at least one site in the scenario")
        sol = solve_uniform_profit(float(v), p, settings)
        result = _pricing_dict(sol)
        result["siteIds"] = [s.id for s in sites]
        result["prices"] = price_vector(list(sites), sol.r)
        if plot:
            from .plotting import plot_price_curve
            plot_price_curve(sol.v, sol.r, p, plot)

    elif cmd == "invest":
        plan = greedy_select(sites, p, cm, settings)
        result = {"plan": plan.to_dict()}
        if oracle:
            if len(sites) <= ENUMERATION_GUARD:
                result["oraclePlan"] = brute_force_select(sites, p, cm, settings).to_dict()
            else:
                result["oraclePlan"] = None
                result["oracleSkipped"] = f"{len(sites)} sites exceed guard {ENUMERATION_GUARD}"
        if plot:
            from .plotting import plot_investment
            plot_investment(sites.sorted_by_v(p).vs(p), p, cm, plot, v_market=plan.v,
                            settings=settings)

    elif cmd in ("planner", "welfare"):
        rep = compare_market_vs_planner(sites, p, cm, settings)
        result = rep.to_dict()
        if plot:
            from .plotting import plot_investment
            plot_investment(sites.sorted_by_v(p).vs(p), p, cm, plot, v_market=rep.v_market,
                            v_planner=rep.v_planner, settings=settings)

    elif cmd == "subsidy":
        rows = subsidy_sweep(sites, scenario.params, scenario.cost, DEFAULT_SUBSIDY_GRID, settings)
        result = {"columns": list(SUBSIDY_COLUMNS),
                  "rows": [[getattr(r, c) for c in SUBSIDY_COLUMNS] for r in rows]}
        if plot:
            from .plotting import plot_subsidy
            plot_subsidy(rows, plot)

    elif cmd == "simulate":
        plan = greedy_select(sites, p, cm, settings)
        sim = simulate_consumers(plan, p, samples, seed)
        eta, shares = closed_form_frequencies(plan.selected, plan.prices, p)
        checks = validate_frequencies(sim, eta, shares)
        result = {"plan": plan.to_dict(), "simulation": sim.to_dict(),
                  "checks": [{"name": c.name, "estimate": c.estimate, "expected": c.expected,
                              "stdErr": c.std_err, "z": c.z, "passed": c.passed}
                             for c in checks],
                  "allPassed": all(c.passed for c in checks)}
        if plot:
            from .plotting import plot_simulation
            plot_simulation(checks, plot)

    else:  # asymptote
        rows = asymptotic_diagnostics(DEFAULT_V_GRID, p, settings)
        result = {"columns": list(DIAGNOSTIC_COLUMNS),
                  "rows": [[getattr(r, c) for c in DIAGNOSTIC_COLUMNS] for r in rows],
                  "hPositiveFrom": h_threshold(rows)}
        if plot:
            from .plotting import plot_asymptotics
            plot_asymptotics(rows, p.alpha2, plot)

    return Report(cmd, flags, scenario.digest(), _clean(result))


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def render_report(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        if report.command not in TABULAR:
            raise DomainError(f"csv output is only available for {', '.join(TABULAR)}")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.result["columns"])
        for row in report.result["rows"]:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()
    raise DomainError(f"unknown format {fmt!r}; expected json or csv")


def write_report(report: Report, fmt: str = "json", path=None) -> None:
    text = render_report(report, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evmarket",
                                 description="EV charging market equilibrium engine")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", required=True, help="scenario YAML file")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    ap.add_argument("--oracle", action="store_true", help="also run brute-force site selection")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--plot", help="also write a PNG figure to this path")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = load_scenario(args.scenario)
        report = run_command(args.command, scn, seed=args.seed, samples=args.samples,
                             oracle=args.oracle, plot=args.plot)
        write_report(report, args.format, args.out)
    except ModelError as exc:
        print(f"error: {exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IO_ERROR: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
