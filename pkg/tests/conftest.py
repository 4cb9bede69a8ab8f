import pytest

from qssa_lab import RateParameters

ACCEPTANCE_TITLES = {
    1: "equilibrium and classification",
    2: "bootstrap identities of the invariance iteration",
    3: "slow manifold bracketed by the nullclines",
    4: "order of accuracy along the (k0, eT) ray",
    5: "order of accuracy along the (k0, k2) ray",
    6: "Tikhonov convergence and the classical foil",
    7: "distance to the QSS variety obeys the Gronwall bound",
    8: "diagnostics exactness",
    9: "projection algebra",
    10: "classification at infinity and distinguished trajectory",
    11: "negative divergence on the strip",
}

_details: dict = {}
_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number): acceptance criterion check")


@pytest.fixture
def base():
    """Reference parameter point with a node in the first quadrant."""
    return RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)


@pytest.fixture
def unbounded():
    """Same point with inflow above clearance capacity."""
    return RateParameters(3.5, 1.0, 1.0, 1.0, 3.0)


@pytest.fixture
def report(request):
    """Collect ``key=value`` details for the acceptance summary line."""
    marker = request.node.get_closest_marker("acceptance")
    number = marker.args[0] if marker else None

    def add(**items):
        if number is not None:
            _details.setdefault(number, {}).update(items)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _outcomes[number] = rep.passed


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.4g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in ACCEPTANCE_TITLES.items():
        if number not in _outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if _outcomes[number] else "FAIL"
        detail = " ".join(f"{k}={_fmt(v)}" for k, v in _details.get(number, {}).items())
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")
