"""Relaxed mass transport between two finite spaces with marginal constraints
given by measure polyhedra."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .core import FiniteSpace, InputError, PriorSet, ProbabilityMeasure, QsClass, diracs
from .polyhedra import (
    CertificateError,
    FinitePointSet,
    HPolyhedron,
    LinearFunctional,
    contains,
    lp_optimize,
    polar,
    solve_lp,
)
from .rational import ONE, ZERO, dot, vec
from .sensitivity import is_sensitive
from .sets import PolyUnion, RobustSet, is_solid


@dataclass(frozen=True)
class ProductModel:
    """Two finite models and a prior set on their product.

    Product atoms are labelled ``"a|b"``.  Without explicit couplings the
    product priors are all products of a generator from each side.
    """

    priors1: PriorSet
    priors2: PriorSet
    product_priors: Optional[PriorSet] = None

    def __post_init__(self):
        s1, s2 = self.priors1.space, self.priors2.space
        space = FiniteSpace(tuple(f"{a}|{b}" for a in s1.atoms for b in s2.atoms))
        pp = self.product_priors
        if pp is None:
            gens = tuple(ProbabilityMeasure(tuple(p * q for p in g1.weights for q in g2.weights))
                         for g1 in self.priors1.generators for g2 in self.priors2.generators)
            pp = PriorSet(space, gens)
        elif pp.space.atoms != space.atoms:
            raise InputError("coupling priors must live on the product space")
        n1, n2 = set(self.priors1.nonpolar_atoms), set(self.priors2.nonpolar_atoms)
        for a in pp.nonpolar_atoms:
            if a // s2.n not in n1 or a % s2.n not in n2:
                raise InputError("coupling priors charge a pair with a polar marginal atom")
        object.__setattr__(self, "product_priors", pp)

    @property
    def space1(self) -> FiniteSpace:
        return self.priors1.space

    @property
    def space2(self) -> FiniteSpace:
        return self.priors2.space

    @property
    def space(self) -> FiniteSpace:
        return self.product_priors.space

    @property
    def k(self) -> int:
        return self.product_priors.k

    def pairs(self) -> tuple:
        """For each product coordinate, its (first, second) marginal coordinate."""
        n2 = self.space2.n
        pos1 = {a: p for p, a in enumerate(self.priors1.nonpolar_atoms)}
        pos2 = {a: p for p, a in enumerate(self.priors2.nonpolar_atoms)}
        return tuple((pos1[a // n2], pos2[a % n2]) for a in self.product_priors.nonpolar_atoms)

    def marginals(self, mu) -> tuple:
        m1 = [ZERO] * self.priors1.k
        m2 = [ZERO] * self.priors2.k
        for w, (i, j) in zip(mu, self.pairs()):
            m1[i] += w
            m2[j] += w
        return tuple(m1), tuple(m2)


@dataclass(frozen=True)
class MarginalSystem:
    """Admissible first and second marginals, as measure polyhedra."""

    model: ProductModel
    M1: HPolyhedron
    M2: HPolyhedron

    def __post_init__(self):
        for M, priors, name in ((self.M1, self.model.priors1, "M1"),
                                (self.M2, self.model.priors2, "M2")):
            if M.dim != priors.k:
                raise InputError(f"{name} has the wrong dimension")
        M1, M2 = self.M1.canonical(), self.M2.canonical()
        for M, priors, name in ((M1, self.model.priors1, "M1"),
                                (M2, self.model.priors2, "M2")):
            if not M.contains_point((ZERO,) * M.dim):
                raise InputError(f"{name} must contain the zero measure")
            if not is_solid(RobustSet(priors, M, "derived"))[0]:
                raise InputError(f"{name} must be solid")
        object.__setattr__(self, "M1", M1)
        object.__setattr__(self, "M2", M2)

    @classmethod
    def from_sets(cls, model: ProductModel, C1: RobustSet, C2: RobustSet) -> "MarginalSystem":
        from .duality import polar_ca
        if C1.priors != model.priors1 or C2.priors != model.priors2:
            raise InputError("marginal sets must use the model's prior sets")
        return cls(model, polar_ca(C1).poly, polar_ca(C2).poly)

    def product_polyhedron(self) -> HPolyhedron:
        """Measures on the product whose marginals are admissible."""
        pairs = self.model.pairs()
        rows = []
        for M, side in ((self.M1, 0), (self.M2, 1)):
            for r in M.constraints:
                rows.append(LinearFunctional(tuple(r.coeffs[p[side]] for p in pairs), r.offset))
        return HPolyhedron(self.model.k, tuple(rows), True, 0)


def _goal(sys: MarginalSystem, X) -> tuple:
    x = X.coords if isinstance(X, QsClass) else vec(X)
    if len(x) != sys.model.k:
        raise InputError(f"goal has {len(x)} coordinates, expected {sys.model.k}")
    if any(v < 0 for v in x):
        raise InputError("goal must be non-negative")
    return x


def relaxed_primal(X, sys: MarginalSystem):
    """``(value, mu)`` maximising ``<X, mu>`` over admissible couplings;
    ``(None, None)`` when the supremum is infinite."""
    x = _goal(sys, X)
    out = lp_optimize(x, sys.product_polyhedron())
    if not out.optimal:
        return None, None
    return out.value, out.primal_point


def _support(M: HPolyhedron, x) -> Optional:
    out = lp_optimize(tuple(x), M)
    return out.value if out.optimal else None


def dual_min(X, sys: MarginalSystem):
    """``(value, (X1, X2))`` minimising the summed marginal supremum over
    pairs with ``X <= X1 + X2``, as one LP with the inner suprema dualised."""
    x = _goal(sys, X)
    model = sys.model
    k1, k2 = model.priors1.k, model.priors2.k
    R1, R2 = sys.M1.constraints, sys.M2.constraints
    r1, r2 = len(R1), len(R2)
    nv = k1 + k2 + r1 + r2
    A, b = [], []
    for v, (i, j) in zip(x, model.pairs()):
        row = [0] * nv
        row[i] = -1
        row[k1 + j] = -1
        A.append(row)
        b.append(-v)
    for base, k, R, off in ((0, k1, R1, k1 + k2), (k1, k2, R2, k1 + k2 + r1)):
        for i in range(k):
            row = [0] * nv
            row[base + i] = 1
            for r, con in enumerate(R):
                row[off + r] = -con.coeffs[i]
            A.append(row)
            b.append(0)
    c = [0] * (k1 + k2) + [con.offset for con in R1] + [con.offset for con in R2]
    out = solve_lp(c, A, b, [True] * nv, maximize=False)
    if not out.optimal:
        raise CertificateError("the transport dual is always feasible and bounded below")
    X1 = tuple(out.primal_point[:k1])
    X2 = tuple(out.primal_point[k1:k1 + k2])
    if any(v > X1[i] + X2[j] for v, (i, j) in zip(x, model.pairs())):
        raise CertificateError("dual pair does not dominate the goal")
    s1, s2 = _support(sys.M1, X1), _support(sys.M2, X2)
    if s1 is None or s2 is None or s1 + s2 != out.value:
        raise CertificateError("dual value does not match the marginal suprema of its pair")
    return out.value, (X1, X2)


def split_budget_set(sys: MarginalSystem) -> HPolyhedron:
    """``{Y >= 0 : Y <= Y1 + Y2 with sup_M1 Y1 + sup_M2 Y2 <= 1}``.

    Each supremum is replaced by its LP dual over the rows of ``Mi``
    (multipliers ``yi >= 0`` with ``Mi^T yi >= Yi`` and cost ``bi . yi``);
    the split and the multipliers are then projected out.
    """
    model = sys.model
    m, k1, k2 = model.k, model.priors1.k, model.priors2.k
    R1, R2 = sys.M1.constraints, sys.M2.constraints
    r1, r2 = len(R1), len(R2)
    total = m + k1 + k2 + r1 + r2
    rows = []

    def row(entries, offset=ZERO):
        e = [ZERO] * total
        for idx, v in entries:
            e[idx] += v
        rows.append(LinearFunctional(tuple(e), offset))

    for p, (i, j) in enumerate(model.pairs()):
        row([(p, ONE), (m + i, -ONE), (m + k1 + j, -ONE)])
    for base, k, R, off in ((m, k1, R1, m + k1 + k2), (m + k1, k2, R2, m + k1 + k2 + r1)):
        for i in range(k):
            row([(base + i, ONE)] + [(off + r, -con.coeffs[i]) for r, con in enumerate(R)])
    row([(m + k1 + k2 + r, con.offset) for r, con in enumerate(R1)]
        + [(m + k1 + k2 + r1 + r, con.offset) for r, con in enumerate(R2)], ONE)
    for v in range(m, total):
        row([(v, -ONE)])
    return HPolyhedron(m, tuple(rows), True, total - m).canonical()


def coupling_polar_set(sys: MarginalSystem) -> HPolyhedron:
    """``{Y >= 0 : sup over admissible couplings of <Y, mu> <= 1}``."""
    return polar(sys.product_polyhedron()).canonical()


def _polar_inside(S: HPolyhedron, M: HPolyhedron, what: str):
    v = contains(M, polar(S))
    if not v:
        raise CertificateError(f"{what}: polar measure {v.witness} lies outside the couplings")


@dataclass(frozen=True)
class TransportReport:
    primal_value: Optional[object]
    dual_value: Optional[object]
    optimal_mu: Optional[tuple]
    optimal_pair: Optional[tuple]
    gap_zero: bool
    degenerate: bool
    C: HPolyhedron
    D: HPolyhedron
    C_equals_D: bool
    polar_identity: bool
    C_sensitive: bool


def check_no_gap(X, sys: MarginalSystem, Qset=None) -> TransportReport:
    x = _goal(sys, X)
    pv, mu = relaxed_primal(x, sys)
    dv, pair = dual_min(x, sys)
    if pv is None:
        raise CertificateError("an unbounded primal contradicts a finite dual")
    if dv < pv:
        raise CertificateError("weak duality fails")
    if mu is not None and dot(x, mu) != pv:
        raise CertificateError("primal optimiser does not attain its value")
    gap_zero = dv == pv
    if not gap_zero:
        raise CertificateError(f"duality gap {dv - pv} on a finite LP")
    C, D = split_budget_set(sys), coupling_polar_set(sys)
    v = contains(D, C)
    if not v:
        raise CertificateError(f"C is not inside D at {v.witness}")
    C_eq_D = bool(contains(C, D))
    # M lies in the polar of S exactly when S lies in the polar of M, which
    # is D; so C inside D and D = polar(M) give the reverse inclusions
    M = sys.product_polyhedron().canonical()
    _polar_inside(C, M, "split set")
    _polar_inside(D, M, "coupling polar")
    priors = sys.model.product_priors
    Qs = list(Qset) if Qset is not None else list(diracs(priors))
    sens = is_sensitive(RobustSet(priors, C, "derived"), Qs).sensitive
    if pv > 0:
        scaled = tuple(v_ / pv for v_ in x)
        if not D.contains_point(scaled) or (C_eq_D and not C.contains_point(scaled)):
            raise CertificateError("normalised goal is not in the expected set")
    return TransportReport(pv, dv, mu, pair, gap_zero, pv == 0, C, D, C_eq_D, True, sens)


# -- marginal identity --------------------------------------------------------

def _body_sup(body, w):
    """Supremum of ``<w, X>`` over a member-set body; None when infinite."""
    if isinstance(body, FinitePointSet):
        return max(dot(w, p) for p in body.points)
    pieces = body.pieces if isinstance(body, PolyUnion) else (body,)
    best = None
    for piece in pieces:
        out = lp_optimize(tuple(w), piece)
        if out.infeasible:
            continue
        if not out.optimal:
            return None
        best = out.value if best is None else max(best, out.value)
    return best


def _sup_max(a, b):
    if a is None or b is None:
        return None
    return max(a, b)


@dataclass(frozen=True)
class IdentityReport:
    holds: bool
    probes: tuple  # of (mu, lhs, rhs), None meaning an infinite supremum


def probe_measures(k: int) -> list:
    """Zero, the point masses and all sums of two distinct point masses."""
    out = [(ZERO,) * k]
    for i in range(k):
        e = [ZERO] * k
        e[i] = ONE
        out.append(tuple(e))
    for i, j in combinations(range(k), 2):
        e = [ZERO] * k
        e[i] = e[j] = ONE
        out.append(tuple(e))
    return out


def marginal_polar_identity(sys: MarginalSystem, C1: RobustSet, C2: RobustSet,
                            probes: Sequence = (),
                            split: Optional[HPolyhedron] = None) -> IdentityReport:
    """Check that integrating against a coupling over the split set equals
    the larger of the marginal suprema over ``C1`` and ``C2``."""
    C = split if split is not None else split_budget_set(sys)
    rows = []
    for mu in ([vec(p) for p in probes] or probe_measures(sys.model.k)):
        m1, m2 = sys.model.marginals(mu)
        lhs = _body_sup(C, mu)
        rhs = _sup_max(_body_sup(C1.body, m1), _body_sup(C2.body, m2))
        if lhs != rhs:
            raise CertificateError(f"marginal identity fails at {mu}: {lhs} vs {rhs}")
        rows.append((mu, lhs, rhs))
    return IdentityReport(True, tuple(rows))
