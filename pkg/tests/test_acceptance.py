"""Full-size acceptance criteria at their stated tolerances.

The gap-nonnegativity check inspects every run recorded by the rate and
baseline criteria, so criterion 7 runs last.
"""
import pytest

from compfw.acceptance import CRITERIA

ORDER = (1, 2, 3, 4, 5, 6, 8, 9, 10, 7)


@pytest.mark.parametrize("number", ORDER, ids=[f"criterion_{n}" for n in ORDER])
def test_criterion(number, acceptance_log):
    res = CRITERIA[number](fast=False)
    acceptance_log.append(res.line())
    print(res.line())
    assert res.passed, res.line()
