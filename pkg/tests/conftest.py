import pytest

_LINES = []


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the current test."""

    def record(text):
        request.node.user_properties.append(("detail", text))

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        text = "; ".join(v for k, v in item.user_properties if k == "detail") or "no measurement recorded"
        line = f"{'PASS' if report.passed else 'FAIL'}  {item.name}: {text}"
        _LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
