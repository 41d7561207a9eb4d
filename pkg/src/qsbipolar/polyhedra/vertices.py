"""Vertices of small polyhedra by exact basis enumeration."""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from gmpy2 import mpq

from .hpoly import HPolyhedron


def _rref(M, ncols):
    """In-place reduced row echelon form over the first ``ncols`` columns."""
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [x / pv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    return pivots


def _affine_chart(eqs, n):
    """``(x0, N)`` with ``{x : eqs} = {x0 + N y}``, or None if inconsistent."""
    M = [list(row) for row in eqs]
    pivots = _rref(M, n)
    if any(M[i][n] != 0 for i in range(len(pivots), len(M))):
        return None
    free = [c for c in range(n) if c not in pivots]
    x0 = [mpq(0)] * n
    for i, c in enumerate(pivots):
        x0[c] = M[i][n]
    N = [[mpq(0)] * len(free) for _ in range(n)]
    for j, f in enumerate(free):
        N[f][j] = mpq(1)
        for i, c in enumerate(pivots):
            N[c][j] = -M[i][f]
    return x0, N


def vertices(poly: HPolyhedron) -> list:
    """Sorted vertex list of a polyhedron (empty when it has none).

    Rows that come in opposite pairs cut out an affine subspace; the
    remaining inequalities are rewritten in coordinates of that subspace
    and enumerated ``dim`` at a time.
    """
    poly = poly.resolved()
    n = poly.dim
    rows = [(tuple(mpq(c) for c in r.coeffs), mpq(r.offset)) for r in poly.explicit_rows()]
    keys = set(rows)
    eqs, ineqs = [], []
    for a, b in rows:
        if (tuple(-c for c in a), -b) in keys:
            eqs.append(list(a) + [b])
        else:
            ineqs.append((a, b))
    chart = _affine_chart(eqs, n)
    if chart is None:
        return []
    x0, N = chart
    d = len(N[0]) if N else 0
    # a.(x0 + N y) <= b  becomes  (a N) y <= b - a x0
    local = []
    for a, b in ineqs:
        g = [sum((a[i] * N[i][j] for i in range(n) if a[i]), mpq(0)) for j in range(d)]
        local.append((g, b - sum((a[i] * x0[i] for i in range(n) if a[i]), mpq(0))))
    found = set()
    for combo in combinations(range(len(local)), d):
        M = [list(local[i][0]) + [local[i][1]] for i in combo]
        if _rref(M, d) != list(range(d)):
            continue
        y = [M[i][d] for i in range(d)]
        if all(sum((g[j] * y[j] for j in range(d)), mpq(0)) <= h for g, h in local):
            x = tuple(Fraction(int(v.numerator), int(v.denominator)) for v in
                      (x0[i] + sum((N[i][j] * y[j] for j in range(d)), mpq(0))
                       for i in range(n)))
            found.add(x)
    return sorted(found)
