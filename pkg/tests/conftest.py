import pytest

_CRITERIA = {}


@pytest.fixture
def observe(request):
    """Attach an observed value to the acceptance summary line of this test."""
    def note(text):
        request.node.user_properties.append(("observed", text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        observed = "; ".join(v for k, v in item.user_properties if k == "observed")
        _CRITERIA[number] = (title, report.passed, observed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, observed = _CRITERIA[number]
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if observed:
            line += f"  [{observed}]"
        terminalreporter.write_line(line)
