"""Finite probability models, the upper probability and quasi-sure classes."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .rational import ONE, ZERO, frac, vec


class InputError(ValueError):
    """Malformed model input (bad dimensions, undominated measures, ...)."""


@dataclass(frozen=True)
class FiniteSpace:
    atoms: tuple

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        if not atoms:
            raise InputError("a finite space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise InputError("atom labels must be distinct")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return len(self.atoms)

    def index(self, label: str) -> int:
        try:
            return self.atoms.index(str(label))
        except ValueError:
            raise InputError(f"unknown atom {label!r}") from None

    def event(self, labels: Iterable[str]) -> "Event":
        return Event(frozenset(self.index(a) for a in labels))

    def dirac(self, label_or_index) -> "ProbabilityMeasure":
        i = label_or_index if isinstance(label_or_index, int) else self.index(label_or_index)
        w = [ZERO] * self.n
        w[i] = ONE
        return ProbabilityMeasure(tuple(w))


@dataclass(frozen=True)
class Measure:
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", vec(self.weights))

    @property
    def is_nonneg(self) -> bool:
        return all(w >= 0 for w in self.weights)

    def mass(self, event: "Event") -> Fraction:
        return sum((self.weights[i] for i in event.members), ZERO)

    def total(self) -> Fraction:
        return sum(self.weights, ZERO)


@dataclass(frozen=True)
class ProbabilityMeasure(Measure):
    def __post_init__(self):
        super().__post_init__()
        if any(w < 0 for w in self.weights):
            raise InputError("probability weights must be non-negative")
        if sum(self.weights, ZERO) != 1:
            raise InputError(f"probability weights sum to {sum(self.weights, ZERO)}, not 1")


@dataclass(frozen=True)
class Event:
    members: frozenset

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))

    def __contains__(self, i) -> bool:
        return i in self.members

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class PriorSet:
    space: FiniteSpace
    generators: tuple

    def __post_init__(self):
        gens = tuple(g if isinstance(g, ProbabilityMeasure) else ProbabilityMeasure(tuple(g))
                     for g in self.generators)
        if not gens:
            raise InputError("a prior set needs at least one generator")
        for g in gens:
            if len(g.weights) != self.space.n:
                raise InputError("generator length does not match the space")
        object.__setattr__(self, "generators", gens)

    @property
    def nonpolar_atoms(self) -> tuple:
        """Indices of atoms charged by some generator, in atom order."""
        return tuple(i for i in range(self.space.n)
                     if any(g.weights[i] > 0 for g in self.generators))

    @property
    def k(self) -> int:
        return len(self.nonpolar_atoms)

    @classmethod
    def all_diracs(cls, space: FiniteSpace) -> "PriorSet":
        return cls(space, tuple(space.dirac(i) for i in range(space.n)))


@dataclass(frozen=True)
class QsClass:
    """A quasi-sure class, stored by its values on the non-polar atoms."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", vec(self.coords))

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def linf_norm(self) -> Fraction:
        return max((abs(v) for v in self.coords), default=ZERO)


def _check_event(priors: PriorSet, event: Event):
    if any(i < 0 or i >= priors.space.n for i in event.members):
        raise InputError("event is not over the prior set's space")


def upper_probability(priors: PriorSet, event: Event) -> Fraction:
    _check_event(priors, event)
    return max(g.mass(event) for g in priors.generators)


def is_polar(priors: PriorSet, event: Event) -> bool:
    return upper_probability(priors, event) == 0


def quotient(priors: PriorSet, raw: Sequence) -> QsClass:
    raw = vec(raw)
    if len(raw) != priors.space.n:
        raise InputError(f"raw vector has length {len(raw)}, expected {priors.space.n}")
    return QsClass(tuple(raw[i] for i in priors.nonpolar_atoms))


def embed(priors: PriorSet, X: QsClass, fill=ZERO) -> tuple:
    """A raw representative of ``X`` with ``fill`` on polar atoms."""
    _check_dim(priors, X)
    raw = [frac(fill)] * priors.space.n
    for pos, i in enumerate(priors.nonpolar_atoms):
        raw[i] = X.coords[pos]
    return tuple(raw)


def _check_dim(priors: PriorSet, X: QsClass):
    if len(X.coords) != priors.k:
        raise InputError(f"class has {len(X.coords)} coordinates, expected {priors.k}")


def qs_compare(priors: PriorSet, X: QsClass, Y: QsClass) -> str:
    _check_dim(priors, X)
    _check_dim(priors, Y)
    le = all(a <= b for a, b in zip(X.coords, Y.coords))
    ge = all(a >= b for a, b in zip(X.coords, Y.coords))
    if le and ge:
        return "eq"
    if le:
        return "leq"
    if ge:
        return "geq"
    return "incomparable"


def total_variation(mu: Measure) -> Measure:
    return Measure(tuple(abs(w) for w in mu.weights))


def is_dominated(mu: Measure, priors: PriorSet) -> bool:
    if len(mu.weights) != priors.space.n:
        raise InputError("measure length does not match the space")
    nonpolar = set(priors.nonpolar_atoms)
    return all(w == 0 for i, w in enumerate(mu.weights) if i not in nonpolar)


def order_support(mu: Measure, priors: PriorSet) -> Event:
    """Atoms charged by ``|mu|``; checks both defining clauses of a support."""
    if not is_dominated(mu, priors):
        raise InputError("measure is not dominated by the prior set")
    tv = total_variation(mu)
    supp = Event(frozenset(i for i, w in enumerate(tv.weights) if w > 0))
    # outside the support the measure vanishes, and a null subset of the
    # support is polar; both reduce to atom checks on a finite space
    assert all(tv.weights[i] == 0 for i in range(priors.space.n) if i not in supp)
    assert all(not is_polar(priors, Event({i})) for i in supp.members)
    return supp


def disjoint_supported_alternative(priors: PriorSet) -> tuple:
    """Diracs on the non-polar atoms; equivalence with ``priors`` is re-checked."""
    alt = tuple(priors.space.dirac(i) for i in priors.nonpolar_atoms)
    check = PriorSet(priors.space, alt)
    if check.nonpolar_atoms != priors.nonpolar_atoms:
        raise AssertionError("alternative does not share the polar events")
    return alt


def same_polar_events(p1: PriorSet, p2: PriorSet) -> bool:
    """Exhaustive check that two prior sets have identical polar events."""
    n = p1.space.n
    for r in range(n + 1):
        for members in combinations(range(n), r):
            ev = Event(frozenset(members))
            if is_polar(p1, ev) != is_polar(p2, ev):
                return False
    return True


def support_positions(priors: PriorSet, Q: Measure) -> tuple:
    """Positions (in quotient coordinates) of the atoms in the support of ``Q``."""
    supp = order_support(Q, priors)
    return tuple(pos for pos, i in enumerate(priors.nonpolar_atoms) if i in supp)


def check_model_measure(priors: PriorSet, Q: Measure) -> ProbabilityMeasure:
    if not isinstance(Q, ProbabilityMeasure):
        Q = ProbabilityMeasure(tuple(Q.weights if isinstance(Q, Measure) else Q))
    if len(Q.weights) != priors.space.n:
        raise InputError("measure length does not match the space")
    if not is_dominated(Q, priors):
        raise InputError("measure is not dominated by the prior set")
    return Q


def project_jQ(priors: PriorSet, X: QsClass, Q: Measure) -> tuple:
    Q = check_model_measure(priors, Q)
    _check_dim(priors, X)
    return tuple(X.coords[p] for p in support_positions(priors, Q))


def quotient_weights(priors: PriorSet, mu: Measure) -> tuple:
    """Weights of a dominated measure on the non-polar atoms."""
    if not is_dominated(mu, priors):
        raise InputError("measure is not dominated by the prior set")
    return tuple(mu.weights[i] for i in priors.nonpolar_atoms)


def diracs(priors: PriorSet) -> tuple:
    return disjoint_supported_alternative(priors)
