import pytest

from quadwalk.model import derive_functional_equation, kernel, load_model
from quadwalk.orbit import compute_orbit


@pytest.fixture(scope="session")
def g_lambda():
    return load_model("G_lambda")


@pytest.fixture(scope="session")
def kreweras():
    return load_model("kreweras")


@pytest.fixture(scope="session")
def orbit_g(g_lambda):
    return compute_orbit(g_lambda)


@pytest.fixture(scope="session")
def orbit_k(kreweras):
    return compute_orbit(kreweras)


@pytest.fixture(scope="session")
def kernel_g(g_lambda):
    return kernel(g_lambda)


@pytest.fixture(scope="session")
def kernel_k(kreweras):
    return kernel(kreweras)


@pytest.fixture(scope="session")
def fe_g(g_lambda):
    return derive_functional_equation(g_lambda)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
