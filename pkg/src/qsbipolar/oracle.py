"""Brute-force membership oracle for solid convex hulls in dimension <= 3.

Shares no code with the main LP or projection path: it has its own dense
simplex (Dantzig's rule with a Bland fallback), its own vertex and ray
enumeration for small H-forms, and a grid of convex combinations.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .core import InputError
from .polyhedra import CertificateError, FinitePointSet, HPolyhedron
from .sets import PolyUnion, RobustSet

MAX_DIM = 3
_DEGENERATE_LIMIT = 25


def _det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    return sum(((-1) ** j) * M[0][j] * _det([row[:j] + row[j + 1:] for row in M[1:]])
               for j in range(n))


def _cramer(M, rhs):
    d = _det(M)
    if d == 0:
        return None
    out = []
    for j in range(len(M)):
        Mj = [row[:j] + [rhs[i]] + row[j + 1:] for i, row in enumerate(M)]
        out.append(Fraction(_det(Mj), 1) / d)
    return tuple(out)


def _h_generators(poly: HPolyhedron):
    """Vertices and normalised extreme rays of a small pure H-form."""
    n = poly.dim
    rows = [(list(r.coeffs), r.offset) for r in poly.constraints]
    if poly.nonneg:
        for i in range(n):
            rows.append(([Fraction(-1) if j == i else Fraction(0) for j in range(n)], Fraction(0)))
    ok = lambda x: all(sum(a * v for a, v in zip(c, x)) <= b for c, b in rows)
    verts = set()
    for combo in combinations(rows, n):
        x = _cramer([c for c, _ in combo], [b for _, b in combo])
        if x is not None and ok(x):
            verts.add(x)
    rays = set()
    ones = [Fraction(1)] * n
    cone = [(c, Fraction(0)) for c, _ in rows]
    for combo in combinations(cone, n - 1):
        r = _cramer([c for c, _ in combo] + [ones], [Fraction(0)] * (n - 1) + [Fraction(1)])
        if r is not None and all(sum(a * v for a, v in zip(c, r)) <= 0 for c, _ in cone):
            rays.add(r)
    return sorted(verts), sorted(rays)


def _generators(body):
    if isinstance(body, FinitePointSet):
        return list(body.points), []
    if isinstance(body, PolyUnion):
        pts, rays = [], []
        for piece in body.pieces:
            p, r = _generators(piece)
            pts += p
            rays += r
        return sorted(set(pts)), sorted(set(rays))
    if body.lifted_dims:
        body = body.resolved()
    return _h_generators(body)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# -- a small dense simplex ----------------------------------------------------

def feasible_standard(A, b) -> tuple:
    """Decide ``{x >= 0 : A x = b}`` (``b >= 0``) by phase-one simplex.

    Returns ``(True, x)`` with a verified solution or ``(False, y)`` with a
    verified Farkas vector (``y A <= 0`` and ``y . b > 0``).
    """
    m, n = len(A), len(A[0]) if A else 0
    T = [[Fraction(v) for v in A[i]] + [Fraction(1) if k == i else Fraction(0) for k in range(m)]
         + [Fraction(b[i])] for i in range(m)]
    basis = [n + i for i in range(m)]
    width = n + m
    # reduced costs of the phase-one objective (minimise the artificials)
    cost = [Fraction(0)] * n + [Fraction(1)] * m
    degenerate = 0
    while True:
        red = [cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(m)) for j in range(width)]
        bland = degenerate > _DEGENERATE_LIMIT
        entering = None
        for j in range(width):
            if red[j] < 0 and (entering is None or (not bland and red[j] < red[entering])):
                entering = j
                if bland:
                    break
        if entering is None:
            break
        leave, best = None, None
        for i in range(m):
            if T[i][entering] > 0:
                ratio = T[i][-1] / T[i][entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        degenerate = degenerate + 1 if best == 0 else 0
        pv = T[leave][entering]
        T[leave] = [v / pv for v in T[leave]]
        for i in range(m):
            if i != leave and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [a - f * c for a, c in zip(T[i], T[leave])]
        basis[leave] = entering
    x = [Fraction(0)] * width
    for i, j in enumerate(basis):
        x[j] = T[i][-1]
    if all(x[n + i] == 0 for i in range(m)):
        sol = x[:n]
        if any(sum(A[i][j] * sol[j] for j in range(n)) != b[i] for i in range(m)):
            raise CertificateError("oracle solution failed substitution")
        return True, tuple(sol)
    # duals of the phase-one optimum from the artificial columns
    y = [Fraction(1) - (cost[n + i] - sum(cost[basis[r]] * T[r][n + i] for r in range(m)))
         for i in range(m)]
    if not (all(sum(y[i] * A[i][j] for i in range(m)) <= 0 for j in range(n))
            and sum(y[i] * b[i] for i in range(m)) > 0):
        raise CertificateError("oracle Farkas vector failed substitution")
    return False, tuple(y)


class MembershipOracle:
    """Decides membership in the smallest closed convex solid superset of a
    set given by generators or by a small H-form."""

    def __init__(self, S, max_denominator: int = 8):
        body = S.body if isinstance(S, RobustSet) else S
        if isinstance(body, (list, tuple)):
            pts = [tuple(Fraction(v) for v in p) for p in body]
            body = FinitePointSet(len(pts[0]), tuple(pts))
        if body.dim > MAX_DIM:
            raise InputError(f"the oracle handles at most {MAX_DIM} coordinates")
        if max_denominator < 1:
            raise InputError("max denominator must be positive")
        self.dim = body.dim
        self.points, self.rays = _generators(body)
        self.grid = self._grid(max_denominator)

    def _grid(self, q: int) -> list:
        """Maximal points among convex combinations with weights in (1/q)Z."""
        pts = self.points
        if not pts:
            return []
        reach = set()
        for weights in _compositions(q, len(pts)):
            reach.add(tuple(sum(Fraction(w, q) * p[d] for w, p in zip(weights, pts) if w)
                            for d in range(self.dim)))
        maximal = []
        for p in sorted(reach, reverse=True):
            if not any(all(a >= b for a, b in zip(o, p)) for o in maximal):
                maximal.append(p)
        return maximal

    def grid_member(self, X) -> bool:
        return any(all(x <= g for x, g in zip(X, p)) for p in self.grid)

    def lp_member(self, X) -> bool:
        """``X <= sum l_v v + sum n_r r`` with ``l`` in the simplex, ``n >= 0``."""
        if not self.points:
            return False
        d, g, h = self.dim, len(self.points), len(self.rays)
        A, b = [], []
        for k in range(d):
            A.append([p[k] for p in self.points] + [r[k] for r in self.rays]
                     + [Fraction(-1) if j == k else Fraction(0) for j in range(d)])
            b.append(Fraction(X[k]))
        A.append([Fraction(1)] * g + [Fraction(0)] * (h + d))
        b.append(Fraction(1))
        return feasible_standard(A, b)[0]

    def contains(self, X) -> bool:
        """A grid hit is itself a certificate (an explicit dominating
        combination); otherwise the LP decides."""
        X = tuple(Fraction(v) for v in X)
        if len(X) != self.dim:
            raise InputError("point has the wrong number of coordinates")
        if any(v < 0 for v in X):
            return False
        if self.grid_member(X):
            return True
        return self.lp_member(X)


def oracle_membership(S, X: Sequence, max_denominator: int = 8) -> bool:
    return MembershipOracle(S, max_denominator).contains(X)
