"""All acceptance criteria at full size and their stated tolerances.

One PASS/FAIL line per criterion is printed in the terminal summary.
"""

import pytest

from opsys import acceptance


@pytest.mark.slow
@pytest.mark.parametrize("fn", acceptance.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(fn, acceptance_log):
    c = acceptance.run_one(fn)
    acceptance_log.append(c.line())
    print(c.line())
    assert c.passed, c.note or c.detail
