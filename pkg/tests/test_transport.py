import pytest

from conftest import F
from qsbipolar.core import FiniteSpace, InputError, PriorSet
from qsbipolar.polyhedra import HPolyhedron, same_set
from qsbipolar.sets import RobustSet, bounded_by
from qsbipolar.transport import (
    MarginalSystem,
    ProductModel,
    check_no_gap,
    dual_min,
    marginal_polar_identity,
    probe_measures,
    relaxed_primal,
)

P1 = PriorSet.all_diracs(FiniteSpace(("a", "b")))
P2 = PriorSet.all_diracs(FiniteSpace(("x", "y")))
MODEL = ProductModel(P1, P2)
BOX1, BOX2 = bounded_by(P1, (1, 1)), bounded_by(P2, (1, 1))
TOTAL = MarginalSystem.from_sets(MODEL, BOX1, BOX2)
OFF_A = RobustSet(P1, HPolyhedron.from_rows([[1, 0]], [0]))
MASS1 = MarginalSystem.from_sets(MODEL, OFF_A, BOX2)


def test_total_mass_marginals():
    assert same_set(TOTAL.M1, HPolyhedron.from_rows([[1, 1]], [1]))


@pytest.mark.parametrize("X", [(1, 1, 1, 1), (F(1, 2), 1, 0, F(1, 3)), (1, 0, 1, 0)])
def test_relaxed_primal_is_max_atom(X):
    value, mu = relaxed_primal(X, TOTAL)
    assert value == max(X)
    assert sum(m * x for m, x in zip(mu, X)) == value


def test_relaxed_primal_zero_and_diagonal():
    assert relaxed_primal((0, 0, 0, 0), TOTAL)[0] == 0
    assert relaxed_primal((1, 0, 0, 1), TOTAL)[0] == 1


def test_dual_min_examples():
    value, pair = dual_min((1, 1, 1, 1), TOTAL)
    assert value == 1
    # the half-half split is another optimal dual pair
    half = ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2)))
    for (y1, y2) in (pair, half):
        assert all(y1[i] + y2[j] >= 1 for i in range(2) for j in range(2))
        assert max(y1) + max(y2) == value
    assert dual_min((0, 0, 0, 0), TOTAL)[0] == 0
    assert dual_min((1, 0, 0, 1), TOTAL)[0] == 1


def test_no_gap_total_mass():
    rep = check_no_gap((1, 1, 1, 1), TOTAL)
    assert rep.gap_zero and rep.C_equals_D
    assert same_set(rep.C, HPolyhedron.box([1, 1, 1, 1]))


def test_no_gap_off_set():
    rep = check_no_gap((1, 2, 1, 1), MASS1)
    assert rep.gap_zero and rep.C_equals_D and rep.primal_value == 2


def test_no_gap_zero_goal():
    rep = check_no_gap((0, 0, 0, 0), TOTAL)
    assert rep.primal_value == 0 and rep.dual_value == 0 and rep.degenerate


def test_marginal_identity_boxes():
    rep = marginal_polar_identity(TOTAL, BOX1, BOX2)
    assert rep.holds
    zero = rep.probes[0]
    assert zero[1] == zero[2] == 0
    for mu, lhs, rhs in rep.probes:
        m1, m2 = MODEL.marginals(mu)
        assert lhs == max(sum(m1), sum(m2))


def test_marginal_identity_product_dirac():
    rep = marginal_polar_identity(MASS1, OFF_A, BOX2, probes=[(0, 1, 0, 0)])
    (_, lhs, rhs), = rep.probes
    assert lhs == rhs == 1


def test_probe_measures_count():
    assert len(probe_measures(4)) == 1 + 4 + 6


def test_marginal_system_validation():
    with pytest.raises(InputError):
        MarginalSystem(MODEL, HPolyhedron.from_rows([[-1, 0]], [-1]), TOTAL.M2)
    with pytest.raises(InputError):
        check_no_gap((1, 1, 1), TOTAL)
