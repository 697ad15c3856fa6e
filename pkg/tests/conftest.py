"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion gate")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "detail": []})
    entry["passed"] &= report.passed
    entry["detail"].extend(getattr(item, "criterion_detail", []))


@pytest.fixture
def detail(request):
    """Append human-readable measurements to the criterion's summary line."""
    lines = []
    request.node.criterion_detail = lines
    return lines.append


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        c = _criteria[number]
        status = "PASS" if c["passed"] else "FAIL"
        extra = "; ".join(c["detail"])
        terminalreporter.write_line(f"criterion {number} {status}: {c['title']}" + (f" ({extra})" if extra else ""))
