import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion checked by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


@pytest.fixture
def measured(request):
    """Attach a measured value to the acceptance summary line of this test."""

    def _note(text):
        request.node.user_properties.append(("measured", str(text)))

    return _note


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        notes = [v for k, v in report.user_properties if k == "measured"]
        if report.skipped and isinstance(report.longrepr, tuple):
            notes.append(report.longrepr[2].removeprefix("Skipped: "))
        name = report.nodeid.split("::")[-1]
        _RESULTS[props["criterion"]].append((outcome, name, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (cid, title), rows in sorted(_RESULTS.items()):
        outcomes = {r[0] for r in rows}
        overall = "FAIL" if "FAIL" in outcomes else ("PASS" if "PASS" in outcomes else "SKIP")
        tr.write_line(f"{cid} {overall}: {title}")
        for outcome, name, note in rows:
            tr.write_line(f"    {outcome} {name}" + (f"  [{note}]" if note else ""))
