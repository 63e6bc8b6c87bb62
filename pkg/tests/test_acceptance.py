"""Acceptance gate: every numbered criterion at its stated tolerance.

Each criterion prints one pass/fail line (visible with -s or in the
captured output); the parametrized test id carries the criterion number
and name so the pytest report itself reads as the acceptance checklist.
Shared transients are cached inside the verify module, so the amplitude
and topology criteria reuse the same converged attractors.
"""

import pytest

from walkercell import verify

NUMBERS = sorted(verify._CRITERIA)
IDS = [f"{n:02d}-{verify._CRITERIA[n][0]}" for n in NUMBERS]


def test_registry_covers_all_criteria():
    assert NUMBERS == list(range(1, 15))
    covered = sorted(n for nums in verify.SUITES.values() for n in nums)
    assert covered == NUMBERS


@pytest.mark.parametrize("number", NUMBERS, ids=IDS)
def test_criterion(number):
    r = verify.run_criterion(number)
    print(verify.format_line(r))
    assert r.passed, verify.format_line(r)
