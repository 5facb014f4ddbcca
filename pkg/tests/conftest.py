import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quasiground import ConstantPotential, ModelSpec, SolveConfig, TransformSpec, TransformedPower, minimize_ground_state

ACCEPTANCE_LINES = {}
SOLVE_SECONDS = {}


def record(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def timed_solve(name, model, config):
    t0 = time.perf_counter()
    rep = minimize_ground_state(model, config)
    SOLVE_SECONDS[name] = time.perf_counter() - t0
    return rep


def power_model(kind, N=3, mu=1.0, q=5.0, V0=1.0):
    return ModelSpec(N, TransformSpec(kind), ConstantPotential(V0), TransformedPower(mu, q))


@pytest.fixture(scope="session")
def bn_model():
    return power_model("identity")


@pytest.fixture(scope="session")
def sf_model():
    return power_model("superfluid_film")


@pytest.fixture(scope="session")
def laser_model():
    return power_model("laser_channeling")


@pytest.fixture(scope="session")
def bn_solve(bn_model):
    return timed_solve("bn_solve", bn_model, SolveConfig(R=40.0, n=4096))


@pytest.fixture(scope="session")
def bn_solve_half(bn_model):
    return timed_solve("bn_solve_half", bn_model, SolveConfig(R=20.0, n=2048))


@pytest.fixture(scope="session")
def sf_solve(sf_model):
    return timed_solve("sf_solve", sf_model, SolveConfig(R=40.0, n=4096))


@pytest.fixture(scope="session")
def laser_solve(laser_model):
    return timed_solve("laser_solve", laser_model, SolveConfig(R=40.0, n=4096))
