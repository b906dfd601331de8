import math
import time

import pytest

from subharm.nonlinearity import ExtendedField, make_nonlinearity
from subharm.periodic import find_periodic_orbits
from subharm.weights import WeightSpec

ACCEPTANCE_LINES: list[str] = []


def fig1_problem():
    return WeightSpec.sin(3, 1.0, 10.0), make_nonlinearity("atan", (400,))


def fig2_problem():
    return WeightSpec.sin(1, 2 * math.pi, 6.0), make_nonlinearity("polymix", (100, 100))


@pytest.fixture(scope="session")
def fig1():
    w, n = fig1_problem()
    return w, n, ExtendedField(n, w)


@pytest.fixture(scope="session")
def fig2():
    w, n = fig2_problem()
    return w, n, ExtendedField(n, w)


@pytest.fixture(scope="session")
def fig2_search():
    w, n = fig2_problem()
    return find_periodic_orbits(w, n, 2)


@pytest.fixture(scope="session")
def fig1_search():
    w, n = fig1_problem()
    t = time.perf_counter()
    res = find_periodic_orbits(w, n, 1)
    return res, time.perf_counter() - t


@pytest.fixture(scope="session")
def harmonic():
    w = WeightSpec.const(1.0, 2 * math.pi)
    from subharm.nonlinearity import Nonlinearity
    return ExtendedField(Nonlinearity("power", (1.0,)), w, extension="odd")


@pytest.fixture(scope="session")
def record_acceptance():
    def record(name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
