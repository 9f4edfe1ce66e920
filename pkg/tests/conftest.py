import sys

from hypothesis import settings

# fixed example database-free runs so the suite is reproducible
settings.register_profile("repro", derandomize=True, deadline=None, database=None)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance summary")
    for key in sorted(results):
        terminalreporter.write_line(results[key].line)
