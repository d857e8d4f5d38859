"""Shared pytest hooks.

Each acceptance check in ``test_acceptance.py`` is named
``test_criterion_<number>_...``; after one runs, a single summary line is
printed so a log scan shows the pass/fail status of every numbered
contract at a glance.
"""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    status = "PASS" if report.passed else "FAIL"
    print(f"\nCRITERION {int(m.group(1))} {status}", flush=True)
