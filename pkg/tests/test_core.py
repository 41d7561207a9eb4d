from fractions import Fraction

import pytest

from conftest import F
from qsbipolar.core import (
    Event,
    FiniteSpace,
    InputError,
    Measure,
    PriorSet,
    ProbabilityMeasure,
    QsClass,
    disjoint_supported_alternative,
    embed,
    is_dominated,
    is_polar,
    order_support,
    project_jQ,
    qs_compare,
    quotient,
    same_polar_events,
    total_variation,
    upper_probability,
)


def test_upper_probability_examples():
    s = FiniteSpace(("1", "2", "3"))
    assert upper_probability(PriorSet.all_diracs(s), s.event(["2"])) == 1
    assert upper_probability(PriorSet.all_diracs(s), Event(frozenset())) == 0
    single = PriorSet(s, ((F(1, 2), F(1, 2), 0),))
    assert upper_probability(single, s.event(["1"])) == F(1, 2)


def test_is_polar_examples(abc_two_diracs):
    s = abc_two_diracs.space
    assert is_polar(abc_two_diracs, s.event(["c"]))
    assert is_polar(abc_two_diracs, Event(frozenset()))
    assert not is_polar(PriorSet.all_diracs(s), s.event(["a"]))


def test_quotient_examples(abc_two_diracs):
    assert quotient(abc_two_diracs, (3, 5, 7)).coords == (3, 5)
    assert quotient(abc_two_diracs, (0, 0, 0)).coords == (0, 0)
    assert quotient(abc_two_diracs, (1, 2, 7)) == quotient(abc_two_diracs, (1, 2, -4))


def test_embed_round_trip(abc_two_diracs):
    X = quotient(abc_two_diracs, (3, 5, 7))
    assert embed(abc_two_diracs, X) == (3, 5, 0)


def test_qs_compare_examples(ab_diracs):
    X = QsClass((1, 2))
    assert qs_compare(ab_diracs, X, X) == "eq"
    assert qs_compare(ab_diracs, X, QsClass((1, 3))) == "leq"
    assert qs_compare(ab_diracs, QsClass((1, 3)), X) == "geq"
    assert qs_compare(ab_diracs, QsClass((0, 5)), QsClass((5, 0))) == "incomparable"


def test_is_dominated_examples(abc_two_diracs):
    assert is_dominated(Measure((F(1, 2), F(1, 2), 0)), abc_two_diracs)
    assert not is_dominated(Measure((F(1, 2), 0, F(1, 2))), abc_two_diracs)
    assert is_dominated(Measure((0, 0, 0)), abc_two_diracs)


def test_total_variation_examples():
    assert total_variation(Measure((1, -2))).weights == (1, 2)
    assert total_variation(Measure((0, 0))).weights == (0, 0)
    assert total_variation(Measure((F(1, 3), 2))).weights == (F(1, 3), 2)


def test_order_support_examples(abc_two_diracs):
    s = abc_two_diracs.space
    assert order_support(s.dirac("b"), abc_two_diracs).members == {1}
    assert order_support(Measure((F(1, 2), F(1, 2), 0)), abc_two_diracs).members == {0, 1}
    assert order_support(Measure((0, 0, 0)), abc_two_diracs).members == frozenset()


def test_order_support_rejects_undominated(abc_two_diracs):
    with pytest.raises(InputError):
        order_support(Measure((0, 0, 1)), abc_two_diracs)


def test_disjoint_supported_alternative_examples():
    s = FiniteSpace(("1", "2", "3"))
    alt = disjoint_supported_alternative(PriorSet.all_diracs(s))
    assert [q.weights for q in alt] == [s.dirac(i).weights for i in range(3)]
    one = PriorSet(s, (s.dirac("1"),))
    assert [q.weights for q in disjoint_supported_alternative(one)] == [s.dirac("1").weights]
    t = FiniteSpace(("a", "b", "c"))
    mixed = PriorSet(t, ((F(1, 2), F(1, 2), 0),))
    alt = disjoint_supported_alternative(mixed)
    assert [q.weights for q in alt] == [t.dirac("a").weights, t.dirac("b").weights]
    assert same_polar_events(mixed, PriorSet(t, alt))


def test_project_jQ_examples(ab_diracs):
    s = ab_diracs.space
    assert project_jQ(ab_diracs, QsClass((3, 5)), s.dirac("a")) == (3,)
    full = ProbabilityMeasure((F(1, 2), F(1, 2)))
    assert project_jQ(ab_diracs, QsClass((3, 5)), full) == (3, 5)
    assert project_jQ(ab_diracs, QsClass((0, 0)), full) == (0, 0)


@pytest.mark.parametrize("weights", [(F(1, 2), F(1, 3)), (-1, 2), (F(3, 2), F(-1, 2))])
def test_probability_measure_validation(weights):
    with pytest.raises(InputError):
        ProbabilityMeasure(weights)


def test_space_validation():
    with pytest.raises(InputError):
        FiniteSpace(())
    with pytest.raises(InputError):
        FiniteSpace(("a", "a"))


def test_prior_set_needs_generators():
    with pytest.raises(InputError):
        PriorSet(FiniteSpace(("a",)), ())


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        Measure((0.5, 0.5))


def test_upper_probability_is_max_over_generators():
    s = FiniteSpace(("a", "b", "c"))
    P = PriorSet(s, ((F(1, 2), F(1, 2), 0), (0, F(1, 4), F(3, 4))))
    assert upper_probability(P, s.event(["b"])) == F(1, 2)
    assert upper_probability(P, s.event(["b", "c"])) == 1
    assert isinstance(upper_probability(P, s.event(["a"])), Fraction)
