import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# (number, title, passed, seconds, detail) rows filled in by test_acceptance.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, secs, detail in sorted(ACCEPTANCE):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{num:>2}] {verdict} {title} ({secs:.2f}s) {detail}")
