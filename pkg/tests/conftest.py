import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qsbipolar.core import FiniteSpace, PriorSet, ProbabilityMeasure

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "qsbipolar" / "fixtures"


def F(x, y=1):
    return Fraction(x, y)


@pytest.fixture
def ab_diracs():
    return PriorSet.all_diracs(FiniteSpace(("a", "b")))


@pytest.fixture
def abc_two_diracs():
    """Priors {delta_a, delta_b} on {a, b, c}: c is the polar atom."""
    s = FiniteSpace(("a", "b", "c"))
    return PriorSet(s, (s.dirac("a"), s.dirac("b")))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def half_half():
    return ProbabilityMeasure((F(1, 2), F(1, 2)))
