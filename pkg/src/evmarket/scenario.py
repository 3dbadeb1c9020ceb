"""Scenario files: YAML with a fixed key set, validated on load."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml

from .choice import CandidateSet, ChoiceParams, Site
from .errors import ModelError, ScenarioError
from .investment import CostModel
from .pricing import SolverSettings
from .welfare import SubsidySetting, apply_subsidy

PARAM_KEYS = ("alpha1", "alpha2", "beta1", "beta2", "phi", "f0", "rho0", "eug", "pg", "pe")
SITE_KEYS = ("id", "f", "c")
COST_KEYS = {"f0Capital": "f0_capital", "gamma": "gamma", "budget": "budget"}
SUBSIDY_KEYS = {"evSubsidy": "ev_subsidy", "capitalSubsidy": "capital_subsidy"}
SOLVER_KEYS = {"gridBase": "grid_base", "maxBracketExp": "max_bracket_exp",
               "tolAbs": "tol_abs", "fdRelStep": "fd_rel_step"}
TOP_KEYS = ("params", "sites", "cost", "subsidy", "solver")
REQUIRED_TOP = ("params", "sites", "cost")

DEFAULT_SCENARIO = Path(__file__).with_name("scenarios") / "default.yaml"


@dataclass(frozen=True)
class Scenario:
    params: ChoiceParams
    sites: CandidateSet
    cost: CostModel
    subsidy: Optional[SubsidySetting] = None
    solver: SolverSettings = SolverSettings()

    def effective(self):
        """Parameters and costs with the scenario's own subsidy applied."""
        if self.subsidy is None:
            return self.params, self.cost
        return apply_subsidy(self.params, self.cost, self.subsidy)

    def to_dict(self) -> dict:
        out = {
            "params": {k: getattr(self.params, k) for k in PARAM_KEYS},
            "sites": [{"id": s.id, "f": s.f, "c": s.c} for s in self.sites],
            "cost": {k: getattr(self.cost, a) for k, a in COST_KEYS.items()},
        }
        if self.subsidy is not None:
            out["subsidy"] = {k: getattr(self.subsidy, a) for k, a in SUBSIDY_KEYS.items()}
        out["solver"] = {k: getattr(self.solver, a) for k, a in SOLVER_KEYS.items()}
        return out

    def digest(self) -> str:
        d = self.to_dict()
        if math.isinf(d["cost"]["budget"]):
            d["cost"]["budget"] = "inf"
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _key_lines(node, path=(), out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (k.value,)
            out[p] = k.start_mark.line + 1
            _key_lines(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[path + (i,)] = v.start_mark.line + 1
            _key_lines(v, path + (i,), out)
    return out


class _Ctx:
    def __init__(self, lines, source):
        self.lines, self.source = lines, source

    def fail(self, path, msg):
        line = None
        for n in range(len(path), 0, -1):
            line = self.lines.get(tuple(path[:n]))
            if line is not None:
                break
        where = f"{self.source}:{line}" if line else self.source
        raise ScenarioError(f"{where}: {'.'.join(str(x) for x in path) or '<root>'}: {msg}")

    def mapping(self, data, path, allowed, required=()):
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        for k in data:
            if k not in allowed:
                self.fail(tuple(path) + (k,), f"unknown key {k!r}")
        for k in required:
            if k not in data:
                self.fail(path, f"missing field {k!r}")
        return data

    def number(self, value, path, integer=False):
        if isinstance(value, bool):
            self.fail(path, "expected a number")
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                self.fail(path, f"expected a number, got {value!r}")
        if not isinstance(value, (int, float)):
            self.fail(path, "expected a number")
        if integer:
            if float(value) != int(value):
                self.fail(path, "expected an integer")
            return int(value)
        return float(value)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: malformed YAML: {exc}") from exc
    ctx = _Ctx(_key_lines(root) if root is not None else {}, source)
    ctx.mapping(data, (), TOP_KEYS, REQUIRED_TOP)

    try:
        raw = ctx.mapping(data["params"], ("params",), PARAM_KEYS, PARAM_KEYS)
        params = ChoiceParams(**{k: ctx.number(raw[k], ("params", k)) for k in PARAM_KEYS})

        if not isinstance(data["sites"], list):
            ctx.fail(("sites",), "expected a list of sites")
        sites = []
        for i, s in enumerate(data["sites"]):
            ctx.mapping(s, ("sites", i), SITE_KEYS, SITE_KEYS)
            sites.append(Site(str(s["id"]), ctx.number(s["f"], ("sites", i, "f")),
                              ctx.number(s["c"], ("sites", i, "c"))))
        candidates = CandidateSet(tuple(sites))

        raw = ctx.mapping(data["cost"], ("cost",), COST_KEYS, ("f0Capital",))
        kw = {}
        for k, attr in COST_KEYS.items():
            if k in raw:
                if k == "budget" and raw[k] is None:
                    kw[attr] = math.inf
                else:
                    kw[attr] = ctx.number(raw[k], ("cost", k))
        cost = CostModel(**kw)

        subsidy = None
        if data.get("subsidy") is not None:
            raw = ctx.mapping(data["subsidy"], ("subsidy",), SUBSIDY_KEYS)
            subsidy = SubsidySetting(**{a: ctx.number(raw[k], ("subsidy", k))
                                        for k, a in SUBSIDY_KEYS.items() if k in raw})

        solver = SolverSettings()
        if data.get("solver") is not None:
            raw = ctx.mapping(data["solver"], ("solver",), SOLVER_KEYS)
            solver = SolverSettings(**{
                a: ctx.number(raw[k], ("solver", k), integer=(a == "max_bracket_exp"))
                for k, a in SOLVER_KEYS.items() if k in raw})
    except ScenarioError:
        raise
    except ModelError as exc:
        raise type(exc)(f"{source}: {exc}") from exc
    return Scenario(params, candidates, cost, subsidy, solver)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), str(path))


def dump_scenario(scn: Scenario) -> str:
    d = scn.to_dict()
    return yaml.safe_dump(d, sort_keys=False)
