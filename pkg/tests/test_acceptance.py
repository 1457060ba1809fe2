"""Acceptance criteria 1-8, one test each.

Every test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary.  Run this file directly to print them without
pytest.
"""

import pytest

from periodic_cubics import acceptance

RESULTS: list[acceptance.CriterionResult] = []


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    res = acceptance.run_criterion(number)
    RESULTS.append(res)
    print(res.line())
    assert res.passed, res.metrics


if __name__ == "__main__":
    ok = True
    for n in sorted(acceptance.CRITERIA):
        res = acceptance.run_criterion(n)
        print(res.line(), flush=True)
        ok &= res.passed
    raise SystemExit(0 if ok else 1)
