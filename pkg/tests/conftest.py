import pytest

_CRITERIA: dict[int, list[tuple[str, str]]] = {}

@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA.setdefault(marker.args[0], []).append((item.name, rep.outcome))

def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        passed = sum(o == "passed" for _, o in results)
        skipped = sum(o == "skipped" for _, o in results)
        status = "PASS" if passed == len(results) else ("SKIP" if skipped == len(results) else "FAIL")
        line = f"criterion {n}: {status} ({passed}/{len(results)} checks passed)"
        failed = [name for name, o in results if o == "failed"]
        if failed:
            line += "; failing: " + ", ".join(failed)
        tr.write_line(line)
