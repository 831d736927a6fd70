from collections import OrderedDict

import pytest

_RESULTS = OrderedDict()


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    return mark.args[0] if mark else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    tag = _criterion(item)
    if tag is None or (report.when != "call" and report.passed):
        return
    entry = _RESULTS.setdefault(tag, {"passed": True, "failures": []})
    if report.failed:
        entry["passed"] = False
        entry["failures"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for tag in sorted(_RESULTS, key=lambda s: int(s[2:])):
        entry = _RESULTS[tag]
        if entry["passed"]:
            tr.write_line(f"{tag}: PASS")
        else:
            tr.write_line(f"{tag}: FAIL ({', '.join(entry['failures'])})")
