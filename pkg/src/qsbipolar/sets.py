"""Subsets of the non-negative quasi-sure cone and the j_Q calculus.

A :class:`RobustSet` pairs a prior set with a member-set body over the
non-polar coordinates.  Three body kinds occur:

* :class:`HPolyhedron` for constraint-built and derived convex sets,
* :class:`FinitePointSet` for literal generator lists (never convexified),
* :class:`PolyUnion` for finite unions of polyhedra, which arise as
  envelopes of point sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import (
    Event,
    InputError,
    Measure,
    PriorSet,
    QsClass,
    check_model_measure,
    is_dominated,
    quotient_weights,
    support_positions,
)
from .polyhedra import (
    ContainmentVerdict,
    FinitePointSet,
    HPolyhedron,
    LinearFunctional,
    contains,
    cylinder,
    downset_hull,
    eliminate,
    lp_optimize,
    solid_downset,
)
from .rational import ONE, ZERO, vec


@dataclass(frozen=True)
class PolyUnion:
    dim: int
    pieces: tuple = ()

    def contains_point(self, x) -> bool:
        return any(p.contains_point(x) for p in self.pieces)

    def is_empty(self) -> bool:
        return all(p.is_empty() for p in self.pieces)


@dataclass(frozen=True)
class RobustSet:
    priors: PriorSet
    body: object
    origin: str = "constraints"

    def __post_init__(self):
        if self.body.dim != self.priors.k:
            raise InputError(f"set lives in dimension {self.body.dim}, "
                             f"but the model has {self.priors.k} non-polar atoms")
        if isinstance(self.body, HPolyhedron) and not self.body.nonneg:
            object.__setattr__(self, "body", HPolyhedron(
                self.body.dim, self.body.constraints, True, self.body.lifted_dims))

    @property
    def dim(self) -> int:
        return self.priors.k

    @property
    def kind(self) -> str:
        if isinstance(self.body, HPolyhedron):
            return "polyhedron"
        if isinstance(self.body, FinitePointSet):
            return "points"
        return "union"

    def contains_point(self, X) -> bool:
        x = X.coords if isinstance(X, QsClass) else vec(X)
        return self.body.contains_point(x)

    def is_empty(self) -> bool:
        return self.body.is_empty()


@dataclass(frozen=True)
class GeneratorSet:
    priors: PriorSet
    points: tuple

    def __post_init__(self):
        pts = tuple(p.coords if isinstance(p, QsClass) else vec(p) for p in self.points)
        if not pts:
            raise InputError("a generator set needs at least one point")
        for p in pts:
            if len(p) != self.priors.k:
                raise InputError("generator has the wrong number of coordinates")
            if any(v < 0 for v in p):
                raise InputError("generators must be non-negative")
        object.__setattr__(self, "points", pts)

    def as_set(self) -> RobustSet:
        return RobustSet(self.priors, FinitePointSet(self.priors.k, self.points), "generators")


def _coords(X) -> tuple:
    return X.coords if isinstance(X, QsClass) else vec(X)


# -- set-level containment --------------------------------------------------

def set_contains(A, B) -> ContainmentVerdict:
    """Decide ``B subseteq A`` for any pair of bodies (or RobustSets)."""
    A = A.body if isinstance(A, RobustSet) else A
    B = B.body if isinstance(B, RobustSet) else B
    if isinstance(B, PolyUnion):
        for piece in B.pieces:
            v = set_contains(A, piece)
            if not v:
                return v
        return ContainmentVerdict(True)
    if isinstance(A, PolyUnion):
        if isinstance(B, FinitePointSet):
            for p in B.points:
                if not A.contains_point(p):
                    return ContainmentVerdict(False, p)
            return ContainmentVerdict(True)
        if B.is_empty() or any(contains(piece, B) for piece in A.pieces):
            return ContainmentVerdict(True)
        raise NotImplementedError("containment of a polyhedron in a union of polyhedra")
    return contains(A, B)


def same_members(A, B) -> bool:
    return bool(set_contains(A, B)) and bool(set_contains(B, A))


def intersect_sets(sets: Sequence[RobustSet]) -> RobustSet:
    sets = list(sets)
    if not sets:
        raise InputError("nothing to intersect")
    priors = sets[0].priors
    body = sets[0].body
    for s in sets[1:]:
        if s.priors != priors:
            raise InputError("sets live over different prior sets")
        body = _intersect_bodies(body, s.body)
    return RobustSet(priors, body, "derived")


def _intersect_bodies(a, b):
    if isinstance(a, FinitePointSet):
        return FinitePointSet(a.dim, tuple(p for p in a.points if b.contains_point(p)))
    if isinstance(b, FinitePointSet):
        return _intersect_bodies(b, a)
    if isinstance(a, PolyUnion) or isinstance(b, PolyUnion):
        pa = a.pieces if isinstance(a, PolyUnion) else (a,)
        pb = b.pieces if isinstance(b, PolyUnion) else (b,)
        pieces = tuple(x.intersect(y) for x in pa for y in pb)
        return PolyUnion(a.dim, tuple(p for p in pieces if not p.is_empty()))
    return a.intersect(b)


# -- constructors -------------------------------------------------------------

def from_constraints(priors: PriorSet, constraints: Sequence) -> RobustSet:
    """``{X >= 0 : <mu_i, X> <= a_i}`` for dominated non-negative measures."""
    rows = []
    for mu, bound in constraints:
        if not isinstance(mu, Measure):
            mu = Measure(tuple(mu))
        if len(mu.weights) != priors.space.n:
            raise InputError("constraint measure has the wrong length")
        if not mu.is_nonneg:
            raise InputError("constraint measures must be non-negative")
        if not is_dominated(mu, priors):
            raise InputError("constraint measure charges a polar atom")
        rows.append(LinearFunctional(quotient_weights(priors, mu), bound))
    return RobustSet(priors, HPolyhedron(priors.k, tuple(rows), True, 0), "constraints")


def from_generators(priors: PriorSet, points: Sequence) -> RobustSet:
    return GeneratorSet(priors, tuple(points)).as_set()


def smallest_closed_convex_solid(gen) -> RobustSet:
    """Solid hull of the convex hull of the member set."""
    S = gen.as_set() if isinstance(gen, GeneratorSet) else gen
    return RobustSet(S.priors, _hull_body(S.body), "derived")


def _hull_body(body) -> HPolyhedron:
    if isinstance(body, FinitePointSet):
        return downset_hull(body.points, body.dim)
    if isinstance(body, HPolyhedron):
        return solid_downset(body)
    raise NotImplementedError("hull of a union body")


def bounded_by(priors: PriorSet, Y) -> RobustSet:
    y = _coords(Y)
    if len(y) != priors.k:
        raise InputError("bound has the wrong number of coordinates")
    if any(v < 0 for v in y):
        raise InputError("bound must be non-negative")
    return RobustSet(priors, HPolyhedron.box(y), "constraints")


def supermartingale_set(priors: PriorSet, partition: Sequence[Event], Y, Qset) -> RobustSet:
    """Uniform conditional-expectation bound ``E_Q[X | B] <= Y(B)``."""
    y = _coords(Y)
    if len(y) != priors.k:
        raise InputError("bound has the wrong number of coordinates")
    nonpolar = priors.nonpolar_atoms
    pos_of = {a: p for p, a in enumerate(nonpolar)}
    seen = set()
    blocks = []
    for ev in partition:
        atoms = [i for i in sorted(ev.members) if i in pos_of]
        if seen & set(ev.members):
            raise InputError("partition blocks overlap")
        seen |= set(ev.members)
        values = {y[pos_of[i]] for i in atoms}
        if len(values) > 1:
            raise InputError("bound is not constant on a partition block")
        blocks.append((ev, atoms, values.pop() if values else ZERO))
    if not set(nonpolar) <= seen:
        raise InputError("partition does not cover the non-polar atoms")
    rows = []
    for Q in Qset:
        Q = check_model_measure(priors, Q)
        for ev, atoms, level in blocks:
            mass = Q.mass(ev)
            if mass == 0:
                continue
            c = [ZERO] * priors.k
            for i in atoms:
                c[pos_of[i]] = Q.weights[i]
            rows.append(LinearFunctional(c, level * mass))
    S = RobustSet(priors, HPolyhedron(priors.k, tuple(rows), True, 0), "constraints")
    solid, _ = is_solid(S)
    assert solid, "non-negative coefficient rows must give a solid set"
    return S


# -- the j_Q calculus ---------------------------------------------------------

def image_jQ(S: RobustSet, Q):
    """Restriction of the member set to the support of ``Q``."""
    Q = check_model_measure(S.priors, Q)
    keep = support_positions(S.priors, Q)
    return _project(S.body, keep)


def _project(body, keep):
    drop = [i for i in range(body.dim) if i not in set(keep)]
    if isinstance(body, FinitePointSet):
        return FinitePointSet(len(keep), tuple(tuple(p[i] for i in keep) for p in body.points))
    if isinstance(body, PolyUnion):
        return PolyUnion(len(keep), tuple(eliminate(p, drop) for p in body.pieces))
    return eliminate(body, drop)


def preimage_jQ(D, priors: PriorSet, Q) -> RobustSet:
    """Cylinder over ``D`` (a body on the support of ``Q``) within the orthant."""
    Q = check_model_measure(priors, Q)
    return RobustSet(priors, _cylinder(D, support_positions(priors, Q), priors.k), "derived")


def _cylinder(D, coords, dim):
    if len(coords) != D.dim:
        raise InputError("body dimension does not match the support")
    if isinstance(D, HPolyhedron):
        return cylinder(D, coords, dim)
    if isinstance(D, FinitePointSet):
        if len(coords) == dim:
            ordered = [None] * dim
            for i, c in enumerate(coords):
                ordered[c] = i
            return FinitePointSet(dim, tuple(tuple(p[ordered[j]] for j in range(dim))
                                             for p in D.points))
        return PolyUnion(dim, tuple(cylinder(HPolyhedron.point(p), coords, dim)
                                    for p in D.points))
    return PolyUnion(dim, tuple(cylinder(p, coords, dim) for p in D.pieces))


# -- structural predicates ----------------------------------------------------

def is_convex(S: RobustSet):
    """``(True, None)`` or ``(False, (X, Y, midpoint))`` with the midpoint outside S."""
    body = S.body
    if isinstance(body, HPolyhedron):
        return True, None
    if isinstance(body, FinitePointSet):
        pts = body.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                m = tuple((a + b) / 2 for a, b in zip(pts[i], pts[j]))
                if not body.contains_point(m):
                    return False, (pts[i], pts[j], m)
        return True, None
    raise NotImplementedError("convexity of a union body")


def is_solid(S: RobustSet):
    """``(True, None)`` or ``(False, (X, Y))`` with ``Y <= X``, X in S, Y not in S."""
    body = S.body
    if isinstance(body, FinitePointSet):
        for x in body.points:
            if any(x):
                t = Fraction(1, 2)
                while True:
                    y = tuple(t * v for v in x)
                    if not body.contains_point(y):
                        return False, (x, y)
                    t = Fraction(1, t.denominator + 1)
        return True, None
    if isinstance(body, HPolyhedron):
        down = solid_downset(body)
        v = contains(body, down)
        if v.contained:
            return True, None
        y = v.witness
        # a member of S dominating y, chosen with the smallest coordinate sum
        rows = [LinearFunctional(tuple(-ONE if i == j else ZERO for j in range(body.dim))
                                 + (ZERO,) * body.lifted_dims, -y[i])
                for i in range(body.dim)]
        out = lp_optimize([ONE] * body.dim, body.with_constraints(rows), "min")
        x = out.primal_point[:body.dim]
        if not body.contains_point(x) or body.contains_point(y):
            raise AssertionError("solidity witness failed re-verification")
        return False, (x, y)
    raise NotImplementedError("solidity of a union body")


# -- closedness ---------------------------------------------------------------

@dataclass(frozen=True)
class ClosednessRecord:
    seq_order_closed: bool
    order_closed: bool
    Qset_closed: bool
    locally_Q_closed: tuple
    image_Q_closed: tuple
    equivalence_asserted: bool = False
    notes: tuple = field(default=())

    def flags(self) -> tuple:
        return (self.seq_order_closed, self.order_closed, self.Qset_closed) + \
            tuple(self.locally_Q_closed) + tuple(self.image_Q_closed)

    @property
    def all_agree(self) -> bool:
        return len(set(self.flags())) == 1


def _unit(i, n):
    return tuple(ONE if j == i else ZERO for j in range(n))


def _sups_attained(body, directions) -> bool:
    """Every bounded supremum over the body is attained by a member.

    On a finite-dimensional model this is how limits of monotone sequences
    show up: a sequence climbing towards an unattained supremum would have a
    limit outside the set.
    """
    if isinstance(body, FinitePointSet):
        return True
    pieces = body.pieces if isinstance(body, PolyUnion) else (body,)
    for piece in pieces:
        if piece.is_empty():
            continue
        for d in directions:
            out = lp_optimize(d, piece)
            if out.optimal and not piece.contains_point(out.primal_point[:piece.dim]):
                return False
    return True


def is_closed_all_notions(S: RobustSet, Qset) -> ClosednessRecord:
    from .sensitivity import is_sensitive

    priors, n = S.priors, S.dim
    Qset = [check_model_measure(priors, Q) for Q in Qset]
    if not Qset:
        raise InputError("closedness needs a non-empty Qset")
    rows = []
    if isinstance(S.body, HPolyhedron):
        rows = [r.coeffs[:n] for r in S.body.constraints]
    coord_dirs = [_unit(i, n) for i in range(n)]
    seq = _sups_attained(S.body, coord_dirs)
    ordc = _sups_attained(S.body, coord_dirs + [tuple([ONE] * n)] + rows)
    local, image = [], []
    for Q in Qset:
        keep = support_positions(priors, Q)
        local.append(_sups_attained(S.body, [_unit(i, n) for i in keep]))
        img = _project(S.body, keep)
        image.append(_sups_attained(img, [_unit(i, len(keep)) for i in range(len(keep))]))
    union = sorted({p for Q in Qset for p in support_positions(priors, Q)})
    if len(union) == n:
        qclosed = seq
    else:
        cyl = _cylinder(_project(S.body, union), union, n)
        qclosed = bool(set_contains(S.body, cyl))
    solid, _ = is_solid(S)
    sensitive = solid and is_sensitive(S, Qset).sensitive
    rec = ClosednessRecord(seq, ordc, qclosed, tuple(local), tuple(image), solid and sensitive)
    if rec.equivalence_asserted and not rec.all_agree:
        raise AssertionError(f"closedness notions disagree on a solid sensitive set: {rec}")
    return rec
