"""The ten acceptance criteria, one test each, with a printed pass/fail line."""

import pytest

from tetrafractal import verify

RESULTS = []


@pytest.mark.parametrize("number,name", [(n, name) for n, name, _ in verify.CHECKS],
                         ids=[f"criterion_{n:02d}" for n, _, _ in verify.CHECKS])
def test_criterion(number, name, capsys):
    result = verify.run_check(number)
    RESULTS.append(result)
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.detail


def test_runtime_budgets():
    by_number = {r.number: r for r in RESULTS}
    if 1 in by_number:
        assert by_number[1].seconds < 10.0
    if 7 in by_number:
        assert by_number[7].detail["search_seconds"] < 120.0
