import numpy as np
import pytest

from crnstab.lyapunov import assemble, select_parameters
from crnstab.network import Network, Reaction, builtin_network

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def crn0():
    return builtin_network("crn0")


@pytest.fixture(scope="session")
def crn1():
    return builtin_network("crn1")


@pytest.fixture(scope="session")
def crn2():
    return builtin_network("crn2")


@pytest.fixture(scope="session")
def params0():
    params, report = select_parameters(0.5, 0.1, "crn0")
    assert report.feasible()
    return params


@pytest.fixture(scope="session")
def params1():
    params, report = select_parameters(0.5, 0.1, "crn1")
    assert report.feasible()
    return params


@pytest.fixture(scope="session")
def V0(params0):
    return assemble(params0)


@pytest.fixture(scope="session")
def V1(params1):
    return assemble(params1)


def _scaled_network(net: Network, volume: float) -> Network:
    """Classical volume scaling: kappa_r -> kappa_r v^(1 - |input|), so that
    counts/v follow the deterministic kinetics as v grows."""
    reactions = tuple(
        Reaction(c_in=r.c_in, c_out=r.c_out, kappa=r.kappa * volume ** (1 - sum(r.c_in)))
        for r in net.reactions
    )
    return Network(d=net.d, reactions=reactions, species=net.species)


@pytest.fixture(scope="session")
def scaled_network():
    return _scaled_network


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
