"""Fourier-Motzkin projection with equality substitution.

Rows are kept as primitive integer vectors internally, which keeps the
combination step cheap and makes duplicate detection a hash lookup.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Optional

from ..rational import ZERO
from .hpoly import HPolyhedron, LinearFunctional
from .lp import solve_lp

REDUNDANCY_THRESHOLD = 64


def _to_int_row(coeffs, offset):
    values = list(coeffs) + [offset]
    lcm = 1
    for v in values:
        d = Fraction(v).denominator
        lcm = lcm * d // gcd(lcm, d)
    return _prim([int(Fraction(v) * lcm) for v in values])


def _prim(ints):
    g = 0
    for i in ints:
        if i:
            g = gcd(g, i)
            if g == 1:
                break
    if g > 1:
        ints = [i // g for i in ints]
    return tuple(ints)


class _Infeasible(Exception):
    pass


def _clean(rows):
    """Normalise, drop trivial rows and keep the tightest of parallel rows.

    ``rows`` maps each row to its ancestor set; the smaller set wins ties.
    """
    best = {}
    for r, anc in rows:
        c, o = r[:-1], r[-1]
        g = 0
        for x in c:
            if x:
                g = gcd(g, x)
        if g == 0:
            if o < 0:
                raise _Infeasible
            continue
        c = tuple(x // g for x in c)
        o = Fraction(o, g)
        prev = best.get(c)
        if prev is None or o < prev[0] or (o == prev[0] and len(anc) < len(prev[1])):
            best[c] = (o, anc)
    out = []
    for c, (o, anc) in sorted(best.items(), key=lambda kv: kv[0]):
        d = o.denominator
        out.append((_prim([x * d for x in c] + [o.numerator]), anc))
    return out


def _fresh(rows):
    return [(r, frozenset((i,))) for i, (r, _) in enumerate(rows)]


def _combine(p, n, v):
    a, b = p[v], -n[v]  # a > 0, b > 0
    return tuple(b * x + a * y for x, y in zip(p, n))


def _find_equality(rows, elim):
    present = {r for r, _ in rows}
    for v in elim:
        for r, _ in rows:
            if r[v] > 0 and tuple(-x for x in r) in present:
                return v, r
    return None


def _implied(row, kept, nonneg) -> bool:
    out = solve_lp(row[:-1], [r[:-1] for r, _ in kept], [r[-1] for r, _ in kept], nonneg)
    if out.infeasible:
        raise _Infeasible
    return out.optimal and out.value <= row[-1]


def _lp_prune(rows, nonneg):
    """Irredundant subsystem.  Rows are first screened against the rows kept
    so far, which is cheap while that set stays small; a final pass then
    removes kept rows implied by the others."""
    kept = []
    for item in sorted(rows, key=lambda x: (sum(1 for v in x[0][:-1] if v), x[0])):
        if kept and _implied(item[0], kept, nonneg):
            continue
        kept.append(item)
    i = 0
    while i < len(kept):
        rest = kept[:i] + kept[i + 1:]
        if rest and _implied(kept[i][0], rest, nonneg):
            kept = rest
        else:
            i += 1
    return kept


def eliminate(poly: HPolyhedron, coords: Iterable[int],
              threshold: Optional[int] = REDUNDANCY_THRESHOLD) -> HPolyhedron:
    """Project ``poly`` onto the visible coordinates not listed in ``coords``.

    Lifted coordinates are always eliminated, so the result has none.  Rows
    remember which input rows they combine; a row built from more than
    ``steps + 1`` inputs after ``steps`` eliminations is redundant
    (Chernikov's rule) and is dropped on the spot.
    """
    coords = sorted(set(coords))
    d, nv = poly.dim, poly.nvars
    if any(c < 0 or c >= d for c in coords):
        raise ValueError("coordinate index out of range")
    keep = [i for i in range(d) if i not in set(coords)]
    elim = coords + list(range(d, nv))
    # kept coords follow the orthant flag; eliminated ones get explicit rows
    nonneg = [poly.nonneg and i < d and i not in set(coords) for i in range(nv)]
    rows = [_to_int_row(r.coeffs, r.offset) for r in poly.constraints]
    if poly.nonneg:
        for i in coords:
            e = [0] * (nv + 1)
            e[i] = -1
            rows.append(tuple(e))
    try:
        rows = _fresh(_clean([(r, frozenset()) for r in rows]))
        steps = 0
        remaining = list(elim)
        while remaining:
            eq = _find_equality(rows, remaining)
            if eq is not None:
                v, e = eq
                neg = tuple(-x for x in e)
                out = []
                for r, anc in rows:
                    if r == e or r == neg:
                        continue
                    if r[v]:
                        a, c = e[v], r[v]
                        out.append((tuple(a * x - c * y for x, y in zip(r, e)), anc))
                    else:
                        out.append((r, anc))
                rows = _fresh(_clean(out))
                steps = 0
            else:
                best = None
                for v in remaining:
                    p = sum(1 for r, _ in rows if r[v] > 0)
                    n = sum(1 for r, _ in rows if r[v] < 0)
                    key = (p * n - p - n, v)
                    if best is None or key < best:
                        best = key
                v = best[1]
                steps += 1
                pos = [x for x in rows if x[0][v] > 0]
                neg = [x for x in rows if x[0][v] < 0]
                out = [x for x in rows if x[0][v] == 0]
                for p, pa in pos:
                    for q, qa in neg:
                        anc = pa | qa
                        if len(anc) <= steps + 1:
                            out.append((_combine(p, q, v), anc))
                rows = _clean(out)
            remaining.remove(v)
            if threshold is not None and len(rows) > threshold:
                rows = _fresh(_lp_prune(rows, nonneg))
                steps = 0
    except _Infeasible:
        return HPolyhedron.empty(len(keep))
    out = []
    for r, _ in rows:
        c = [r[i] for i in keep]
        if poly.nonneg and all(x <= 0 for x in c) and r[-1] >= 0:
            continue  # implied by the orthant
        out.append(LinearFunctional([Fraction(x) for x in c], Fraction(r[-1])))
    return HPolyhedron(len(keep), tuple(out), poly.nonneg, 0)
