import math

import numpy as np
import pytest

from evmarket.choice import CandidateSet, ChoiceParams, Site
from evmarket.investment import CostModel
from evmarket.scenario import DEFAULT_SCENARIO, load_scenario


def unit_params(**kw):
    """alpha1 = alpha2 = beta1 = beta2 = 1 with q0 = C = 1 unless overridden."""
    base = dict(alpha2=1.0, beta1=1.0, q0=1.0, c=1.0)
    base.update(kw)
    return ChoiceParams.from_constants(**base)


def sites_from_vs(vs, p, cost=0.0, prefix="s"):
    """Sites whose exponential systematic utility is exactly-ish ``vs``."""
    return CandidateSet(tuple(
        Site(f"{prefix}{i + 1}", (math.log(v) + p.alpha2 * cost) / p.alpha1, cost)
        for i, v in enumerate(vs)))


def random_params(rng):
    a2, b1 = rng.uniform(0.2, 3.0, 2)
    q0, c = rng.uniform(0.1, 10.0, 2)
    return ChoiceParams.from_constants(float(a2), float(b1), float(q0), float(c))


@pytest.fixture
def p1():
    return unit_params()


@pytest.fixture
def default_scenario():
    return load_scenario(DEFAULT_SCENARIO)


@pytest.fixture
def three_sites(p1):
    return sites_from_vs([8.0, 5.0, 2.0], p1)


@pytest.fixture
def cheap_cost():
    return CostModel(f0_capital=0.05)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
