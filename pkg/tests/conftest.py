"""Prints one ACCEPTANCE line per acceptance test, pass or fail.

Capture is file-descriptor based, so the tests cannot print the checklist
themselves; the terminal reporter writes to the real stream.
"""

import re

_ACCEPTANCE = re.compile(r"test_acceptance\.py::test_(\d{2})_(\w+)")

_config = None


def pytest_configure(config):
    global _config
    _config = config


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _ACCEPTANCE.search(report.nodeid)
    if match is None:
        return
    number, raw_name = match.groups()
    outcome = "PASS" if report.passed else "FAIL"
    line = f"ACCEPTANCE {number} {raw_name.replace('_', '-')}: {outcome}"
    reporter = _config.pluginmanager.get_plugin("terminalreporter") if _config else None
    if reporter is not None:
        reporter.ensure_newline()
        reporter.write_line(line)
    else:
        print(line)
