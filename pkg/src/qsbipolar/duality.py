"""Polars and bipolars of robust sets, and the bipolar-theorem checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import InputError, PriorSet, check_model_measure, support_positions
from .polyhedra import (
    CertificateError,
    FinitePointSet,
    HPolyhedron,
    LinearFunctional,
    contains,
    cylinder,
    downset_hull,
    lp_optimize,
    polar,
    pullback,
)
from .rational import ONE, ZERO, dot
from .sensitivity import is_sensitive
from .sets import (
    PolyUnion,
    RobustSet,
    _hull_body,
    image_jQ,
    intersect_sets,
    is_closed_all_notions,
    is_convex,
    is_solid,
    same_members,
    set_contains,
    smallest_closed_convex_solid,
)


@dataclass(frozen=True)
class CaPolar:
    """Measures ``mu >= 0`` on the non-polar atoms with ``sup_S <mu, X> <= 1``."""

    priors: PriorSet
    poly: HPolyhedron

    def contains_measure(self, mu) -> bool:
        return self.poly.contains_point(mu)


@dataclass(frozen=True)
class KsPolar:
    """Per model ``Q`` the densities ``Z >= 0`` on ``S(Q)`` with ``sup_S E_Q[Z X] <= 1``."""

    priors: PriorSet
    entries: tuple  # of (Q, support positions, HPolyhedron over the support)


def _require_nonempty(S: RobustSet):
    if S.is_empty():
        raise InputError("the set is empty")


def _polar_body(body) -> HPolyhedron:
    if isinstance(body, FinitePointSet):
        rows = tuple(LinearFunctional(p, ONE) for p in body.points)
        return HPolyhedron(body.dim, rows, True, 0)
    if isinstance(body, PolyUnion):
        out = None
        for piece in body.pieces:
            if piece.is_empty():
                continue
            P = polar(piece)
            out = P if out is None else out.intersect(P)
        return out
    return polar(body)


def polar_ca(S: RobustSet) -> CaPolar:
    _require_nonempty(S)
    return CaPolar(S.priors, _polar_body(S.body))


# finite models carry no non-supported measures, so the two polars agree
polar_sca = polar_ca


def bipolar_ca(S: RobustSet, cross_check: bool = True) -> RobustSet:
    """Solid convex hull of S, checked against the polar of its polar."""
    _require_nonempty(S)
    hull = smallest_closed_convex_solid(S)
    if cross_check:
        pp = polar(polar_ca(S).poly.resolved()).resolved()
        if not (contains(hull.body, pp) and contains(pp, hull.body)):
            raise CertificateError("hull and polar-of-polar disagree")
    return hull


def _density_matrix(priors: PriorSet, Q, supp) -> list:
    """Matrix sending a density on ``S(Q)`` to the measure ``Q * Z``."""
    nonpolar = priors.nonpolar_atoms
    M = [[ZERO] * len(supp) for _ in range(priors.k)]
    for j, p in enumerate(supp):
        M[p][j] = Q.weights[nonpolar[p]]
    return M


def polar_ks(S: RobustSet, Qset) -> KsPolar:
    _require_nonempty(S)
    Qs = [check_model_measure(S.priors, Q) for Q in Qset]
    if not Qs:
        raise InputError("the reduction set must be non-empty")
    P = polar_ca(S).poly
    entries = []
    for Q in Qs:
        supp = support_positions(S.priors, Q)
        entries.append((Q, supp, pullback(P, _density_matrix(S.priors, Q, supp), len(supp))))
    return KsPolar(S.priors, tuple(entries))


def _models(priors, Qset):
    Qs = [check_model_measure(priors, Q) for Q in Qset]
    if not Qs:
        raise InputError("the reduction set must be non-empty")
    return Qs


def bipolar_lifted(S: RobustSet, Qset, verify: bool = False) -> RobustSet:
    """Intersection of cylinders over the per-model solid convex hulls."""
    _require_nonempty(S)
    priors = S.priors
    Qs = _models(priors, Qset)
    pieces = []
    for Q in Qs:
        supp = support_positions(priors, Q)
        D = _hull_body(image_jQ(S, Q))
        pieces.append(RobustSet(priors, cylinder(D, supp, priors.k), "derived"))
    out = intersect_sets(pieces)
    out = RobustSet(priors, out.body, "derived")
    if verify:
        dia = bipolar_diamond(S, Qs)
        if not same_members(out, dia):
            raise CertificateError("lifted bipolar and dual-route bipolar disagree")
    return out


def bipolar_diamond(S: RobustSet, Qset) -> RobustSet:
    """Bipolar through the per-model dual cones: every X with
    ``E_Q[Z X] <= 1`` for all feasible ``(Q, Z)``."""
    ks = polar_ks(S, Qset)
    priors = S.priors
    body = None
    for Q, supp, F in ks.entries:
        # w_j = Q(supp_j) X(supp_j) pairs X with the density coordinates
        M = [[ZERO] * priors.k for _ in supp]
        nonpolar = priors.nonpolar_atoms
        for j, p in enumerate(supp):
            M[j][p] = Q.weights[nonpolar[p]]
        piece = pullback(polar(F.resolved()), M, priors.k).resolved()
        body = piece if body is None else body.intersect(piece)
    return RobustSet(priors, body, "derived")


def _disjoint_supports(priors, Qs) -> bool:
    seen = set()
    for Q in Qs:
        supp = set(support_positions(priors, Q))
        if seen & supp:
            return False
        seen |= supp
    return True


def bipolar_star_disjoint(S: RobustSet, Qset) -> RobustSet:
    """``C**`` built from the densities ``Z`` with ``sup_Q E_Q[Z X] <= 1`` on S."""
    _require_nonempty(S)
    priors = S.priors
    Qs = _models(priors, Qset)
    if not _disjoint_supports(priors, Qs):
        raise InputError("the models' supports overlap")
    nonpolar = priors.nonpolar_atoms
    diag = []
    for Q in Qs:
        D = [[ZERO] * priors.k for _ in range(priors.k)]
        for p in range(priors.k):
            D[p][p] = Q.weights[nonpolar[p]]
        diag.append(D)
    P = polar_ca(S).poly
    star = None
    for D in diag:
        piece = pullback(P, D, priors.k)
        star = piece if star is None else star.intersect(piece)
    star = star.resolved()
    star_polar = polar(star)
    body = None
    for D in diag:
        piece = pullback(star_polar, D, priors.k).resolved()
        body = piece if body is None else body.intersect(piece)
    out = RobustSet(priors, body, "derived")
    lifted = bipolar_lifted(S, Qs)
    if not same_members(out, lifted):
        raise CertificateError("star bipolar and lifted bipolar disagree")
    return out


def sensitive_smallest_superset(S: RobustSet, probes: Sequence[RobustSet] = ()) -> RobustSet:
    """Smallest convex, solid, closed, sensitive superset; minimality is probed
    against the supplied supersets plus a bounding box and the Dirac lifting."""
    B = bipolar_ca(S)
    priors = S.priors
    from .core import diracs
    candidates = list(probes)
    candidates.append(bipolar_lifted(S, diracs(priors)))
    candidates.append(_bounding_box(S))
    for D in candidates:
        if not set_contains(D, S):
            continue
        if not set_contains(D, B):
            raise AssertionError("a closed convex solid superset misses part of the hull")
    return B


def _bounding_box(S: RobustSet) -> RobustSet:
    n = S.dim
    upper = []
    for i in range(n):
        e = [ZERO] * n
        e[i] = ONE
        if isinstance(S.body, FinitePointSet):
            upper.append(max(p[i] for p in S.body.points))
            continue
        out = lp_optimize(e, S.body)
        if not out.optimal:
            return RobustSet(S.priors, HPolyhedron.orthant(n), "derived")
        upper.append(out.value)
    return RobustSet(S.priors, HPolyhedron.box(upper), "derived")


# -- theorem checker ----------------------------------------------------------

@dataclass(frozen=True)
class BipolarReport:
    equal: bool
    properties: dict
    bipolar: RobustSet
    witness: Optional[tuple] = None
    witness_reason: Optional[str] = None
    certificate: Optional[dict] = None


def separating_measure(S: RobustSet, X) -> Optional[tuple]:
    """A measure in the polar of S integrating X above 1, if one exists."""
    P = polar_ca(S).poly
    out = lp_optimize(tuple(X), P)
    if out.optimal and out.value <= 1:
        return None
    if out.optimal:
        mu = out.primal_point[:P.dim]
    else:
        base, ray = out.primal_point, out.ray
        slope = dot(tuple(X), ray[:P.dim])
        t = max(ZERO, (ONE - dot(tuple(X), base[:P.dim])) / slope) + 1
        mu = tuple(a + t * b for a, b in zip(base, ray))[:P.dim]
    _verify_separation(S, X, mu)
    return mu


def _verify_separation(S: RobustSet, X, mu):
    if dot(mu, X) <= 1 or any(v < 0 for v in mu):
        raise CertificateError("separating measure does not exceed 1 on the witness")
    body = S.body
    if isinstance(body, FinitePointSet):
        sup = max(dot(mu, p) for p in body.points)
        ok = sup <= 1
    else:
        pieces = body.pieces if isinstance(body, PolyUnion) else (body,)
        ok = True
        for piece in pieces:
            out = lp_optimize(mu, piece)
            ok = ok and (out.infeasible or (out.optimal and out.value <= 1))
    if not ok:
        raise CertificateError("separating measure exceeds 1 somewhere on the set")


def check_bipolar_theorem(S: RobustSet, Qset) -> BipolarReport:
    _require_nonempty(S)
    Qs = _models(S.priors, Qset)
    convex, cwit = is_convex(S)
    solid, swit = is_solid(S)
    closed = is_closed_all_notions(S, Qs).seq_order_closed
    sens = is_sensitive(S, Qs)
    props = {"convex": convex, "solid": solid, "closed": closed, "sensitive": sens.sensitive}
    bip = bipolar_lifted(S, Qs)
    equal = same_members(S, bip)
    if equal != all(props.values()):
        raise AssertionError(f"bipolar equality {equal} contradicts properties {props}")
    if equal:
        return BipolarReport(True, props, bip)
    if not convex:
        witness, reason = cwit[2], "convexity"
        cert = {"kind": "convexity", "pair": (cwit[0], cwit[1])}
    elif not solid:
        witness, reason = swit[1], "solidity"
        cert = {"kind": "solidity", "dominating": swit[0]}
    elif not sens.sensitive:
        witness, reason = sens.witness, "sensitivity"
        cert = {"kind": "envelope"}
    else:
        witness, reason = set_contains(S, bip).witness, "containment"
        cert = {"kind": "containment"}
    if S.contains_point(witness) or not bip.contains_point(witness):
        raise CertificateError("bipolar witness failed re-verification")
    mu = separating_measure(S, witness)
    if mu is not None:
        cert = {"kind": "separating_measure", "measure": mu}
    if cert["kind"] == "envelope":
        families = []
        for Q in Qs:
            supp = support_positions(S.priors, Q)
            families.append((Q, tuple(witness[i] for i in supp)))
        cert["projections"] = tuple(families)
    return BipolarReport(False, props, bip, witness, reason, cert)
