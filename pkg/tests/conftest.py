import pytest

from fracbubble import PotentialModel, SpectralParams, compute_constants

PARAM_SETS = [(3, 0.3), (4, 0.5)]


@pytest.fixture(scope="session", params=PARAM_SETS, ids=lambda p: f"N{p[0]}-s{p[1]}")
def params(request):
    return SpectralParams(*request.param)


@pytest.fixture(scope="session")
def p3():
    return SpectralParams(3, 0.3)


@pytest.fixture(scope="session")
def p4():
    return SpectralParams(4, 0.5)


_CONSTANTS = {}


def constants_for(params, k=50):
    key = (params.N, params.s, k)
    if key not in _CONSTANTS:
        _CONSTANTS[key] = compute_constants(params, PotentialModel.default(params), k=k)
    return _CONSTANTS[key]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
