import json
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from borelheat import ScalarField, approximate_potential, build_free_model
from borelheat.io import load_model

# derandomized so that repeated runs are identical
settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

HERE = Path(__file__).resolve().parent
DATA = HERE / "data"
sys.path.insert(0, str(HERE))   # tests/oracles


# ---------------------------------------------------------------------------
# acceptance criteria: one summary line per criterion
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    name = marker.args[0]
    details = [v for k, v in item.user_properties if k == "detail"]
    ok, notes = _ACCEPTANCE.get(name, (True, []))
    _ACCEPTANCE[name] = (ok and rep.passed, notes + details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("-")[1])):
        ok, notes = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {'; '.join(notes)}")


@pytest.fixture(scope="session")
def ou_model():
    return load_model("ou")[0]


@pytest.fixture(scope="session")
def trig_model():
    return load_model("trig")[0]


@pytest.fixture(scope="session")
def free_model():
    return build_free_model(1, 10.0)


@pytest.fixture(scope="session")
def mehler_poly():
    """W = x^2, i.e. omega^2 x^2 / 4 with omega = 2."""
    return approximate_potential(ScalarField.from_expression("x**2"), (-8, 8))


@pytest.fixture(scope="session")
def mehler_taylor():
    return json.loads((DATA / "mehler_taylor.json").read_text())
