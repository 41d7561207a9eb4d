"""Sensitivity envelopes, coherent families and aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import (
    InputError,
    PriorSet,
    QsClass,
    check_model_measure,
    support_positions,
)
from .polyhedra import FinitePointSet, HPolyhedron, LinearFunctional, cylinder, lp_optimize
from .rational import ONE, ZERO, dot, vec
from .sets import (
    PolyUnion,
    RobustSet,
    _cylinder,
    _project,
    image_jQ,
    intersect_sets,
    set_contains,
)


def _models(priors: PriorSet, Qset) -> list:
    Qs = [check_model_measure(priors, Q) for Q in Qset]
    if not Qs:
        raise InputError("the reduction set must be non-empty")
    return Qs


# -- envelope -----------------------------------------------------------------

def sensitive_envelope(S: RobustSet, Qset) -> RobustSet:
    """Intersection over Q of the cylinders over the j_Q images of S."""
    priors = S.priors
    Qs = _models(priors, Qset)
    if isinstance(S.body, FinitePointSet):
        return RobustSet(priors, _point_envelope(S.body, priors, Qs), "derived")
    pieces = [RobustSet(priors, _cylinder(image_jQ(S, Q), support_positions(priors, Q),
                                          priors.k), "derived") for Q in Qs]
    return intersect_sets(pieces)


def _point_envelope(body: FinitePointSet, priors, Qs):
    """Aggregators of coherent choices of one image point per model."""
    n = body.dim
    supports = [support_positions(priors, Q) for Q in Qs]
    images = [sorted({tuple(p[i] for i in supp) for p in body.points}) for supp in supports]
    found = set()

    def walk(level, assignment):
        if level == len(Qs):
            found.add(tuple(sorted(assignment.items())))
            return
        supp = supports[level]
        for img in images[level]:
            if all(assignment.get(i, v) == v for i, v in zip(supp, img)):
                nxt = dict(assignment)
                nxt.update(zip(supp, img))
                walk(level + 1, nxt)

    walk(0, {})
    covered = sorted({i for s in supports for i in s})
    if len(covered) == n:
        return FinitePointSet(n, tuple(tuple(dict(a)[i] for i in range(n)) for a in found))
    pieces = []
    for a in sorted(found):
        vals = dict(a)
        pieces.append(cylinder(HPolyhedron.point([vals[i] for i in covered]), covered, n))
    return PolyUnion(n, tuple(pieces))


@dataclass(frozen=True)
class SensitivityReport:
    sensitive: bool
    envelope: RobustSet
    witness: Optional[tuple] = None


def is_sensitive(S: RobustSet, Qset) -> SensitivityReport:
    Qs = _models(S.priors, Qset)
    env = sensitive_envelope(S, Qs)
    verdict = set_contains(S.body, env.body)
    if verdict.contained:
        return SensitivityReport(True, env)
    w = verdict.witness
    _verify_envelope_witness(S, Qs, w)
    return SensitivityReport(False, env, w)


def _verify_envelope_witness(S: RobustSet, Qs, w):
    if S.contains_point(w) or any(v < 0 for v in w):
        raise AssertionError("envelope witness lies in the set")
    for Q in Qs:
        supp = support_positions(S.priors, Q)
        if not image_jQ(S, Q).contains_point(tuple(w[i] for i in supp)):
            raise AssertionError("envelope witness has a projection outside the image")


def intersection_preserves(Ss: Sequence[RobustSet], Qsets: Sequence):
    """Intersect the sets; if each is sensitive w.r.t. its reduction set the
    intersection is checked sensitive w.r.t. the union of those sets."""
    if len(Ss) != len(Qsets):
        raise InputError("one reduction set per set is required")
    inter = intersect_sets(Ss)
    each = [is_sensitive(S, Q).sensitive for S, Q in zip(Ss, Qsets)]
    union = []
    for Qset in Qsets:
        for Q in Qset:
            Q = check_model_measure(inter.priors, Q)
            if Q not in union:
                union.append(Q)
    joint = is_sensitive(inter, union).sensitive
    if all(each) and not joint:
        raise AssertionError("intersection of sensitive sets lost sensitivity")
    return inter, {"each_sensitive": tuple(each), "intersection_sensitive": joint,
                   "reduction_set": tuple(union)}


# -- coherence and aggregation ------------------------------------------------

@dataclass(frozen=True)
class CoherentFamily:
    priors: PriorSet
    entries: tuple  # of (ProbabilityMeasure, QsClass)

    def __post_init__(self):
        ents = []
        for Q, X in self.entries:
            Q = check_model_measure(self.priors, Q)
            X = X if isinstance(X, QsClass) else QsClass(tuple(X))
            if len(X) != self.priors.k:
                raise InputError("family member has the wrong number of coordinates")
            ents.append((Q, X))
        object.__setattr__(self, "entries", tuple(ents))


def is_coherent(fam: CoherentFamily):
    """``(True, None)`` or ``(False, (i, j, atom_label))`` for entries i, j."""
    priors = fam.priors
    owner = {}
    for idx, (Q, X) in enumerate(fam.entries):
        for p in support_positions(priors, Q):
            if p in owner:
                j, v = owner[p]
                if v != X.coords[p]:
                    atom = priors.space.atoms[priors.nonpolar_atoms[p]]
                    return False, (j, idx, atom)
            else:
                owner[p] = (idx, X.coords[p])
    return True, None


def build_aggregator(fam: CoherentFamily, fill=None) -> QsClass:
    ok, conflict = is_coherent(fam)
    if not ok:
        raise InputError(f"family is not coherent: entries {conflict[0]} and {conflict[1]} "
                         f"disagree at atom {conflict[2]}")
    priors = fam.priors
    k = priors.k
    fill = [ZERO] * k if fill is None else list(fill.coords if isinstance(fill, QsClass)
                                                 else vec(fill))
    if len(fill) != k:
        raise InputError("fill has the wrong number of coordinates")
    out = list(fill)
    supports = []
    for Q, X in fam.entries:
        supp = support_positions(priors, Q)
        supports.append(set(supp))
        for p in supp:
            out[p] = X.coords[p]
    agg = QsClass(tuple(out))
    disjoint = all(not (a & b) for i, a in enumerate(supports) for b in supports[i + 1:])
    nonneg = all(v >= 0 for _, X in fam.entries for v in X.coords)
    if disjoint and nonneg:
        # truncation-supremum construction: sup over Q of X_Q on S(Q)
        sup = [ZERO] * k
        for (Q, X), supp in zip(fam.entries, supports):
            for p in supp:
                sup[p] = max(sup[p], X.coords[p])
        for supp in supports:
            for p in supp:
                assert sup[p] == out[p], "pasting and truncation supremum disagree"
    return agg


# -- stability ----------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    sensitive: bool
    sampled_stable: bool
    families_checked: int
    witness: Optional[tuple] = None
    family: Optional[tuple] = None


FAMILY_CAP = 64


def is_Q_stable(S: RobustSet, Qset) -> StabilityReport:
    """Decide stability through sensitivity and probe it through families."""
    Qs = _models(S.priors, Qset)
    exact = is_sensitive(S, Qs)
    if isinstance(S.body, FinitePointSet):
        sampled, count, witness, family = _probe_points(S, Qs)
    elif isinstance(S.body, HPolyhedron):
        sampled, count, witness, family = _probe_polyhedron(S, Qs)
    else:
        raise NotImplementedError("stability of a union body")
    if sampled != exact.sensitive:
        raise AssertionError("stability probe and sensitivity disagree")
    if witness is not None:
        fam = CoherentFamily(S.priors, tuple(zip(Qs, family)))
        agg = build_aggregator(fam, witness)
        if agg.coords != witness or S.contains_point(witness):
            raise AssertionError("stability witness failed re-verification")
        if not all(S.contains_point(X) for X in family):
            raise AssertionError("stability family leaves the set")
    return StabilityReport(exact.sensitive, exact.sensitive, sampled, count, witness, family)


def _probe_points(S, Qs):
    body = S.body
    priors = S.priors
    n = body.dim
    supports = [support_positions(priors, Q) for Q in Qs]
    covered = sorted({i for s in supports for i in s})
    top = max((v for p in body.points for v in p), default=ZERO) + 1
    fills = [ZERO] if len(covered) == n else [ZERO, top]
    count = 0
    violations = []

    def walk(level, assignment, chosen):
        nonlocal count
        if count >= FAMILY_CAP:
            return
        if level == len(Qs):
            count += 1
            for f in fills:
                agg = tuple(assignment.get(i, f) for i in range(n))
                if not body.contains_point(agg):
                    violations.append((agg, tuple(chosen)))
                    break
            return
        supp = supports[level]
        for p in body.points:
            if all(assignment.get(i, p[i]) == p[i] for i in supp):
                nxt = dict(assignment)
                nxt.update((i, p[i]) for i in supp)
                walk(level + 1, nxt, chosen + [p])

    walk(0, {}, [])
    if not violations:
        return True, count, None, None
    # report the largest excluded aggregator
    agg, fam = min(violations, key=lambda v: (-sum(v[0]), v[0]))
    return False, count, agg, fam


def _probe_polyhedron(S, Qs):
    """Coherent families as points of a lifted family space.

    Variables are the aggregator X and one member Y_Q of S per model, tied
    by Y_Q = X on the support of Q.  Optimising the defining rows of S over
    this space visits extreme families; an aggregator violating a row is a
    stability counterexample.
    """
    body = S.body
    n, L = body.dim, body.lifted_dims
    m = len(Qs)
    block = n + L
    total = n + m * block
    rows = []
    for q, Q in enumerate(Qs):
        base = n + q * block
        for r in body.constraints:
            c = [ZERO] * total
            c[base:base + block] = r.coeffs
            rows.append(LinearFunctional(c, r.offset))
        for i in range(n):
            c = [ZERO] * total
            c[base + i] = -ONE
            rows.append(LinearFunctional(c, ZERO))
        for i in support_positions(S.priors, Q):
            c = [ZERO] * total
            c[i] = ONE
            c[base + i] = -ONE
            rows.append(LinearFunctional(c, ZERO))
            rows.append(LinearFunctional([-v for v in c], ZERO))
    space = HPolyhedron(n, tuple(rows), True, total - n)
    directions = list(body.resolved().explicit_rows())
    for i in range(n):
        e = [ZERO] * n
        e[i] = ONE
        directions.append(LinearFunctional(e, ZERO))
    count = 0
    families = []
    for d in directions:
        if count >= FAMILY_CAP:
            break
        a = tuple(d.coeffs[:n])
        out = lp_optimize(a, space)
        if out.infeasible:
            return True, count, None, None
        count += 1
        point = out.primal_point
        if out.unbounded:
            slope = dot(a, out.ray[:n])
            t = max(ZERO, (d.offset - dot(a, point[:n])) / slope) + 1
            point = tuple(p + t * r for p, r in zip(point, out.ray))
        families.append(point)
        agg = point[:n]
        if not S.contains_point(agg):
            fam = tuple(point[n + q * block:n + q * block + n] for q in range(m))
            return False, count, agg, fam
    # midpoints of the families found so far
    for i in range(len(families)):
        for j in range(i + 1, len(families)):
            if count >= FAMILY_CAP:
                break
            count += 1
            mid = tuple((a + b) / 2 for a, b in zip(families[i], families[j]))
            if not S.contains_point(mid[:n]):
                fam = tuple(mid[n + q * block:n + q * block + n] for q in range(m))
                return False, count, mid[:n], fam
    return True, count, None, None


# -- sets given by local conditions ------------------------------------------

def bound_test(priors: PriorSet, Q, Y) -> HPolyhedron:
    """Test region for ``Q(X <= Y) = 1`` over the support of Q."""
    Q = check_model_measure(priors, Q)
    y = Y.coords if isinstance(Y, QsClass) else vec(Y)
    supp = support_positions(priors, Q)
    return HPolyhedron.box([y[i] for i in supp])


def supermartingale_test(priors: PriorSet, Q, partition, Y) -> HPolyhedron:
    """Test region for ``E_Q[X | block] <= Y(block)`` Q-a.s."""
    Q = check_model_measure(priors, Q)
    y = Y.coords if isinstance(Y, QsClass) else vec(Y)
    supp = support_positions(priors, Q)
    local = {p: j for j, p in enumerate(supp)}
    nonpolar = priors.nonpolar_atoms
    rows = []
    for ev in partition:
        atoms = [p for p, a in enumerate(nonpolar) if a in ev.members and p in local]
        if not atoms:
            continue
        mass = sum((Q.weights[nonpolar[p]] for p in atoms), ZERO)
        c = [ZERO] * len(supp)
        for p in atoms:
            c[local[p]] = Q.weights[nonpolar[p]]
        rows.append(LinearFunctional(c, y[atoms[0]] * mass))
    return HPolyhedron(len(supp), tuple(rows), True, 0)


def local_condition_set(priors: PriorSet, Qset, quantifier: str, tests) -> RobustSet:
    """``{X >= 0 : for each Q, (exists|forall) test H, j_Q(X) in region(Q, H)}``.

    ``tests`` lists, per model in ``Qset`` order, the test regions as
    polyhedra over the support coordinates of that model.  Under ``exists``
    the per-model union must itself be one of the regions.
    """
    Qs = _models(priors, Qset)
    if quantifier not in ("exists", "forall"):
        raise InputError("quantifier must be 'exists' or 'forall'")
    if len(tests) != len(Qs):
        raise InputError("one list of tests per model is required")
    pieces = []
    for Q, regions in zip(Qs, tests):
        supp = support_positions(priors, Q)
        if not regions:
            raise InputError("each model needs at least one test")
        for R in regions:
            if R.dim != len(supp):
                raise InputError("test region depends on coordinates outside the support")
        if quantifier == "forall":
            region = regions[0]
            for R in regions[1:]:
                region = region.intersect(R)
        else:
            region = next((R for R in regions if all(set_contains(R, T) for T in regions)),
                          None)
            if region is None:
                raise ValueError("union of existential tests is not one of the regions")
        pieces.append(RobustSet(priors, cylinder(region, supp, priors.k), "constraints"))
    C = intersect_sets(pieces)
    C = RobustSet(priors, C.body, "constraints")
    if not is_sensitive(C, Qs).sensitive:
        raise AssertionError("a set cut out by local tests must be sensitive")
    return C
