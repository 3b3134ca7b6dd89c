import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # replay the acceptance criterion lines after the capture-happy run
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)
