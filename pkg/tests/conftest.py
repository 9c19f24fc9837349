from collections import defaultdict

import pytest

_TITLES = {}
_OUTCOMES = defaultdict(list)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    _TITLES[number] = title
    _OUTCOMES[number].append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        parts = _OUTCOMES[number]
        ok = all(passed for _, passed in parts)
        failed = [name for name, passed in parts if not passed]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {_TITLES[number]}"
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        tr.write_line(line)
