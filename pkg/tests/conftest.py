import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


def mpf_to_q(x):
    """Exact rational value of an mpmath mpf."""
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    m = -int(man) if sign else int(man)
    return mpq(m * 2 ** exp) if exp >= 0 else mpq(m, 2 ** -exp)


def q_to_mpf(q):
    q = mpq(q)
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


@pytest.fixture
def hiprec():
    """mpmath at 1200 bits for oracle evaluations."""
    with mpmath.workprec(1200):
        yield mpmath


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
