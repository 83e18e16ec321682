import json
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hardystein.levy_measures import char_exponent, make_measure

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@lru_cache(maxsize=None)
def stable(alpha=1.2, c_plus=2.0, c_minus=1.0, d=1):
    nu = make_measure("stable_asymmetric", alpha=alpha, c_plus=c_plus, c_minus=c_minus, d=d)
    return nu, char_exponent(nu)


@lru_cache(maxsize=None)
def cauchy():
    """Symmetric alpha = 1 stable measure with psi(xi) = |xi|."""
    return stable(1.0, 1 / np.pi, 1 / np.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
