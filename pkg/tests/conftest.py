import numpy as np
import pytest

from authplan import butterfly, make_attack

ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        number, title = marker.args
        detail = getattr(item, "criterion_detail", "")
        ACCEPTANCE[number] = ("PASS" if report.passed else "FAIL", title, detail)
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        line = f"criterion {number}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a one-line result summary to the acceptance report."""

    def set_detail(text: str):
        request.node.criterion_detail = text

    return set_detail


@pytest.fixture
def bf():
    return butterfly()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bf_attack(g, **kw):
    """``bf_attack(g, AC=0.3)`` style attack construction for the butterfly."""
    return make_attack(g, {(k[0], k[1]): v for k, v in kw.items()})
