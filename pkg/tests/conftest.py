import pytest

from periodic_cubics import paramspace


@pytest.fixture(scope="session")
def regions_p2():
    return paramspace.sample_escape_regions(2, 0.5, 8)


@pytest.fixture(scope="session")
def regions_p3():
    return paramspace.sample_escape_regions(3, 0.5, 8)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for res in sorted(results, key=lambda r: r.number):
            terminalreporter.write_line(res.line())
