import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.setdefault(report.nodeid, report.outcome)


def _criterion_index(nodeid: str) -> int:
    match = re.search(r"criterion_(\d+)", nodeid)
    return int(match.group(1)) if match else 99


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE, key=_criterion_index):
        outcome = _ACCEPTANCE[nodeid]
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}: {nodeid.split('::')[-1]}")
