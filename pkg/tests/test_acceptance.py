"""Acceptance gate: one test per criterion, each printing a pass/fail line."""

import pytest

from holonomy_lab.acceptance import CRITERIA, run_one


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, record_acceptance):
    result = run_one(number)
    line = result.line()
    print(line)
    record_acceptance(line)
    assert result.passed, line
