"""H-form polyhedra with optional existentially quantified coordinates.

A point ``x`` (length ``dim``) belongs to an :class:`HPolyhedron` iff some
assignment ``z`` of the ``lifted_dims`` trailing coordinates satisfies every
constraint ``coeffs . (x, z) <= offset``.  The ``nonneg`` flag adds
``x >= 0`` on the visible coordinates only; lifted coordinates are free
unless a constraint says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ..rational import ZERO, dot, fmt, frac, primitive, vec
from .lp import CertificateError, LpOutcome, solve_lp


@dataclass(frozen=True)
class LinearFunctional:
    """The half-space ``coeffs . x <= offset``."""

    coeffs: tuple
    offset: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeffs", vec(self.coeffs))
        object.__setattr__(self, "offset", frac(self.offset))

    def value(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.coeffs, x)

    def satisfied(self, x: Sequence[Fraction]) -> bool:
        return self.value(x) <= self.offset

    def normalized(self) -> "LinearFunctional":
        c, o = primitive(self.coeffs, self.offset)
        return LinearFunctional(c, o)

    def is_trivial(self) -> bool:
        return not any(self.coeffs)

    def __str__(self):
        terms = " ".join(fmt(c) for c in self.coeffs)
        return f"[{terms}] <= {fmt(self.offset)}"


@dataclass(frozen=True)
class HPolyhedron:
    dim: int
    constraints: tuple = ()
    nonneg: bool = True
    lifted_dims: int = 0

    def __post_init__(self):
        rows = tuple(r if isinstance(r, LinearFunctional) else LinearFunctional(*r)
                     for r in self.constraints)
        object.__setattr__(self, "constraints", rows)
        for r in rows:
            if len(r.coeffs) != self.nvars:
                raise ValueError(f"constraint has {len(r.coeffs)} coefficients, "
                                 f"expected {self.nvars}")

    @property
    def nvars(self) -> int:
        return self.dim + self.lifted_dims

    # -- constructors ---------------------------------------------------
    @classmethod
    def orthant(cls, dim: int) -> "HPolyhedron":
        return cls(dim, (), True, 0)

    @classmethod
    def empty(cls, dim: int) -> "HPolyhedron":
        return cls(dim, (LinearFunctional((ZERO,) * dim, Fraction(-1)),), True, 0)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], offsets: Iterable, nonneg: bool = True,
                  dim: Optional[int] = None, lifted_dims: int = 0) -> "HPolyhedron":
        rows = [vec(r) for r in rows]
        offsets = vec(offsets)
        if dim is None:
            if not rows:
                raise ValueError("dim is required for an unconstrained polyhedron")
            dim = len(rows[0]) - lifted_dims
        return cls(dim, tuple(LinearFunctional(r, o) for r, o in zip(rows, offsets)),
                   nonneg, lifted_dims)

    @classmethod
    def box(cls, upper: Sequence) -> "HPolyhedron":
        upper = vec(upper)
        n = len(upper)
        rows = []
        for i, u in enumerate(upper):
            e = [ZERO] * n
            e[i] = Fraction(1)
            rows.append(LinearFunctional(e, u))
        return cls(n, tuple(rows), True, 0)

    @classmethod
    def point(cls, p: Sequence) -> "HPolyhedron":
        p = vec(p)
        n = len(p)
        rows = []
        for i, v in enumerate(p):
            e = [ZERO] * n
            e[i] = Fraction(1)
            rows.append(LinearFunctional(e, v))
            rows.append(LinearFunctional([-x for x in e], -v))
        return cls(n, tuple(rows), False, 0)

    # -- queries ----------------------------------------------------------
    def rows_with_bounds(self):
        """Constraint matrix, offsets and sign flags over all variables."""
        A = [list(r.coeffs) for r in self.constraints]
        b = [r.offset for r in self.constraints]
        nonneg = [self.nonneg] * self.dim + [False] * self.lifted_dims
        return A, b, nonneg

    def explicit_rows(self) -> tuple:
        """Constraints plus ``-x_i <= 0`` rows when the orthant flag is set."""
        rows = list(self.constraints)
        if self.nonneg:
            for i in range(self.dim):
                e = [ZERO] * self.nvars
                e[i] = Fraction(-1)
                rows.append(LinearFunctional(e, ZERO))
        return tuple(rows)

    def satisfies_full(self, xz: Sequence[Fraction]) -> bool:
        """Exact substitution test for a full (visible + lifted) vector."""
        if self.nonneg and any(v < 0 for v in xz[:self.dim]):
            return False
        return all(r.satisfied(xz) for r in self.constraints)

    def contains_point(self, x: Sequence) -> bool:
        x = vec(x)
        if len(x) != self.dim:
            raise ValueError(f"point has length {len(x)}, expected {self.dim}")
        if self.nonneg and any(v < 0 for v in x):
            return False
        if self.lifted_dims == 0:
            return all(r.satisfied(x) for r in self.constraints)
        A, b = [], []
        for r in self.constraints:
            A.append(list(r.coeffs[self.dim:]))
            b.append(r.offset - dot(r.coeffs[:self.dim], x))
        out = solve_lp([ZERO] * self.lifted_dims, A, b, [False] * self.lifted_dims)
        return not out.infeasible

    def feasible_point(self) -> Optional[tuple]:
        """A full member vector (visible + lifted), or None if empty."""
        out = lp_optimize([ZERO] * self.nvars, self, full=True)
        if out.infeasible:
            return None
        return out.primal_point

    def is_empty(self) -> bool:
        return self.feasible_point() is None

    def intersect(self, other: "HPolyhedron") -> "HPolyhedron":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        d, l1, l2 = self.dim, self.lifted_dims, other.lifted_dims
        rows = []
        for r in self.constraints:
            rows.append(LinearFunctional(r.coeffs + (ZERO,) * l2, r.offset))
        for r in other.constraints:
            c = r.coeffs
            rows.append(LinearFunctional(c[:d] + (ZERO,) * l1 + c[d:], r.offset))
        return HPolyhedron(d, tuple(rows), self.nonneg or other.nonneg, l1 + l2)

    def with_constraints(self, extra: Iterable[LinearFunctional]) -> "HPolyhedron":
        return HPolyhedron(self.dim, self.constraints + tuple(extra), self.nonneg, self.lifted_dims)

    def resolved(self) -> "HPolyhedron":
        """Equivalent polyhedron with no lifted coordinates."""
        if self.lifted_dims == 0:
            return self
        from .fm import eliminate
        return eliminate(self, ())

    def canonical(self) -> "HPolyhedron":
        """Resolved form with every redundant row removed."""
        from .fm import eliminate
        return remove_redundant(eliminate(self, ()))

    def dump(self) -> str:
        head = f"# dim={self.dim} lifted={self.lifted_dims} nonneg={self.nonneg}"
        return "\n".join([head] + [str(r) for r in self.constraints])


@dataclass(frozen=True)
class FinitePointSet:
    """A finite (not convexified) member set."""

    dim: int
    points: tuple = field(default=())

    def __post_init__(self):
        pts = sorted(set(vec(p) for p in self.points))
        for p in pts:
            if len(p) != self.dim:
                raise ValueError("point of wrong dimension")
        object.__setattr__(self, "points", tuple(pts))

    def contains_point(self, x: Sequence) -> bool:
        return vec(x) in self.points

    def is_empty(self) -> bool:
        return not self.points


@dataclass(frozen=True)
class ContainmentVerdict:
    contained: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.contained


def lp_optimize(objective: Sequence, poly: HPolyhedron, sense: str = "max",
                full: bool = False) -> LpOutcome:
    """Optimise a linear objective over ``poly``.

    ``objective`` covers the visible coordinates (zero-padded over lifted
    ones) unless ``full`` is set.  Points and rays in the outcome are full
    vectors including lifted coordinates.
    """
    obj = vec(objective)
    expected = poly.nvars if full else poly.dim
    if len(obj) != expected:
        raise ValueError(f"objective has length {len(obj)}, expected {expected}")
    if not full:
        obj = obj + (ZERO,) * poly.lifted_dims
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    A, b, nonneg = poly.rows_with_bounds()
    return solve_lp(obj, A, b, nonneg, maximize=(sense == "max"))


def support_value(poly: HPolyhedron, direction: Sequence) -> Optional[Fraction]:
    """``sup_{x in poly} direction . x``; None if unbounded, raises if empty."""
    out = lp_optimize(direction, poly)
    if out.infeasible:
        raise ValueError("support function of an empty polyhedron")
    return out.value if out.optimal else None


def _exceeding_member(poly: HPolyhedron, a: Sequence, beta: Fraction, out: LpOutcome) -> tuple:
    """Full member vector of ``poly`` with ``a . x > beta`` from an LP outcome."""
    a_full = tuple(a) + (ZERO,) * poly.lifted_dims
    if out.optimal:
        return out.primal_point
    p, r = out.primal_point, out.ray
    slope = dot(a_full, r)
    gap = beta - dot(a_full, p)
    t = max(ZERO, gap / slope) + 1
    return tuple(pi + t * ri for pi, ri in zip(p, r))


def contains(A: HPolyhedron, B) -> ContainmentVerdict:
    """Decide ``B subseteq A`` exactly.

    ``B`` may be an :class:`HPolyhedron` or :class:`FinitePointSet`.  On
    failure the witness is a point of ``B`` outside ``A``.
    """
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    if isinstance(B, FinitePointSet):
        for p in B.points:
            if not A.contains_point(p):
                return ContainmentVerdict(False, p)
        return ContainmentVerdict(True)
    if isinstance(A, FinitePointSet):
        return _poly_in_points(A, B)
    A = A.resolved()
    rows = list(A.constraints)
    if A.nonneg and not B.nonneg:
        rows = list(A.explicit_rows())
    if B.is_empty():
        return ContainmentVerdict(True)
    for r in rows:
        out = lp_optimize(r.coeffs, B)
        if out.optimal and out.value <= r.offset:
            continue
        full = _exceeding_member(B, r.coeffs, r.offset, out)
        w = full[:B.dim]
        if not B.satisfies_full(full) or A.contains_point(w):
            raise CertificateError("containment witness failed re-verification")
        return ContainmentVerdict(False, w)
    return ContainmentVerdict(True)


def _poly_in_points(A: FinitePointSet, B: HPolyhedron) -> ContainmentVerdict:
    """A polyhedron fits in a finite set only if it is empty or one point."""
    p = B.feasible_point()
    if p is None:
        return ContainmentVerdict(True)
    p = p[:B.dim]
    if not A.contains_point(p):
        return ContainmentVerdict(False, p)
    for i in range(B.dim):
        e = [ZERO] * B.dim
        e[i] = Fraction(1)
        for sense in ("max", "min"):
            out = lp_optimize(e, B, sense)
            if out.optimal:
                q = out.primal_point[:B.dim]
            else:
                q = tuple(a + b for a, b in zip(out.primal_point, out.ray))[:B.dim]
            if q != p:
                # the segment [p, q] lies in B and has infinitely many points
                k = 1
                while True:
                    x = tuple(a + (b - a) / k for a, b in zip(p, q))
                    if not A.contains_point(x):
                        return ContainmentVerdict(False, x)
                    k += 1
    return ContainmentVerdict(True)


def same_set(A, B) -> bool:
    return bool(contains(A, B)) and bool(contains(B, A))


def solid_downset(poly: HPolyhedron) -> HPolyhedron:
    """``{z >= 0 : exists y in poly, z <= y}`` as a pure H-form polyhedron."""
    from .fm import eliminate
    n, L = poly.dim, poly.lifted_dims
    total = n + n + L  # z visible, then y and poly's lifted coordinates
    rows = []
    for r in poly.constraints:
        rows.append(LinearFunctional((ZERO,) * n + r.coeffs, r.offset))
    if poly.nonneg:
        for i in range(n):
            e = [ZERO] * total
            e[n + i] = Fraction(-1)
            rows.append(LinearFunctional(e, ZERO))
    for i in range(n):
        e = [ZERO] * total
        e[i] = Fraction(1)
        e[n + i] = Fraction(-1)
        rows.append(LinearFunctional(e, ZERO))
    lifted = HPolyhedron(n, tuple(rows), True, n + L)
    return eliminate(lifted, ())


def downset_hull(points: Iterable[Sequence], dim: int) -> HPolyhedron:
    """Solid hull of the convex hull of finitely many non-negative points."""
    from .fm import eliminate
    pts = sorted(set(vec(p) for p in points))
    if not pts:
        return HPolyhedron.empty(dim)
    k = len(pts)
    total = dim + k
    rows = []
    for i in range(dim):
        e = [ZERO] * total
        e[i] = Fraction(1)
        for j, p in enumerate(pts):
            e[dim + j] = -p[i]
        rows.append(LinearFunctional(e, ZERO))
    for j in range(k):
        e = [ZERO] * total
        e[dim + j] = Fraction(-1)
        rows.append(LinearFunctional(e, ZERO))
    ones = [ZERO] * dim + [Fraction(1)] * k
    rows.append(LinearFunctional(ones, Fraction(1)))
    rows.append(LinearFunctional([-v for v in ones], Fraction(-1)))
    return eliminate(HPolyhedron(dim, tuple(rows), True, k), ())


def polar(poly: HPolyhedron) -> HPolyhedron:
    """``{w >= 0 : sup_{x in poly} w . x <= 1}`` in lifted H-form.

    Dualises the inner supremum: for non-empty ``poly`` with rows
    ``A_x x + A_z z <= b`` the supremum is at most one iff some ``y >= 0``
    has ``A_x^T y >= w`` (equality when ``x`` is free), ``A_z^T y = 0`` and
    ``b . y <= 1``.  The multipliers ``y`` become the lifted coordinates.
    """
    if poly.is_empty():
        raise ValueError("polar of an empty set is the whole space; refusing")
    n, L = poly.dim, poly.lifted_dims
    m = len(poly.constraints)
    total = n + m
    rows = []
    cons = poly.constraints
    for i in range(n):
        e = [ZERO] * total
        e[i] = Fraction(1)
        for k, r in enumerate(cons):
            e[n + k] = -r.coeffs[i]
        rows.append(LinearFunctional(e, ZERO))
        if not poly.nonneg:
            rows.append(LinearFunctional([-v for v in e], ZERO))
    for l in range(L):
        e = [ZERO] * total
        for k, r in enumerate(cons):
            e[n + k] = r.coeffs[n + l]
        rows.append(LinearFunctional(e, ZERO))
        rows.append(LinearFunctional([-v for v in e], ZERO))
    for k in range(m):
        e = [ZERO] * total
        e[n + k] = Fraction(-1)
        rows.append(LinearFunctional(e, ZERO))
    e = [ZERO] * n + [r.offset for r in cons]
    rows.append(LinearFunctional(e, Fraction(1)))
    return HPolyhedron(n, tuple(rows), True, m)


def pullback(poly: HPolyhedron, matrix: Sequence[Sequence], new_dim: int) -> HPolyhedron:
    """``{x >= 0 : matrix @ x in poly}`` for an entrywise non-negative matrix.

    ``matrix`` has ``poly.dim`` rows and ``new_dim`` columns.  Non-negativity
    of ``matrix @ x`` follows from ``x >= 0``, so the orthant flag carries
    over without explicit rows.
    """
    M = [vec(r) for r in matrix]
    if len(M) != poly.dim or any(len(r) != new_dim for r in M):
        raise ValueError("pullback matrix has wrong shape")
    if any(v < 0 for r in M for v in r):
        raise ValueError("pullback matrix must be non-negative")
    d = poly.dim
    rows = []
    for r in poly.constraints:
        c = [ZERO] * new_dim
        for i in range(d):
            a = r.coeffs[i]
            if a:
                for j in range(new_dim):
                    if M[i][j]:
                        c[j] += a * M[i][j]
        rows.append(LinearFunctional(tuple(c) + r.coeffs[d:], r.offset))
    return HPolyhedron(new_dim, tuple(rows), True, poly.lifted_dims)


def cylinder(poly: HPolyhedron, coords: Sequence[int], dim: int) -> HPolyhedron:
    """Preimage of ``poly`` under restriction to ``coords`` of a ``dim``-space,
    intersected with the orthant."""
    k = poly.dim
    if len(coords) != k:
        raise ValueError("coordinate list does not match polyhedron dimension")
    rows = []
    for r in poly.constraints:
        c = [ZERO] * dim
        for i, j in enumerate(coords):
            c[j] = r.coeffs[i]
        rows.append(LinearFunctional(tuple(c) + r.coeffs[k:], r.offset))
    # the orthant flag of the result subsumes any sign freedom of ``poly``
    return HPolyhedron(dim, tuple(rows), True, poly.lifted_dims)


def remove_redundant(poly: HPolyhedron) -> HPolyhedron:
    """Drop rows implied by the others (one LP per row), deterministic order."""
    rows = list(poly.constraints)
    i = 0
    while i < len(rows):
        rest = rows[:i] + rows[i + 1:]
        probe = HPolyhedron(poly.dim, tuple(rest), poly.nonneg, poly.lifted_dims)
        out = lp_optimize(rows[i].coeffs, probe, full=True)
        if out.optimal and out.value <= rows[i].offset:
            rows = rest
        elif out.infeasible:
            return HPolyhedron.empty(poly.dim) if poly.lifted_dims == 0 else \
                HPolyhedron(poly.dim, (LinearFunctional((ZERO,) * poly.nvars, Fraction(-1)),),
                            poly.nonneg, poly.lifted_dims)
        else:
            i += 1
    return HPolyhedron(poly.dim, tuple(rows), poly.nonneg, poly.lifted_dims)
