"""Exact two-phase simplex over the rationals.

Problem form::

    max (or min)  c . x
    subject to    A x <= b,   x_j >= 0 for j flagged non-negative, others free

Pivoting follows Bland's rule in both phases, which terminates and makes
every outcome a deterministic function of the input.  The tableau runs on
GMP rationals for speed; each returned witness (attaining point, improving
ray, Farkas multipliers) is converted back to Fraction and re-checked by
substitution before it leaves this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from gmpy2 import mpq

from ..rational import ZERO, dot

_Q0 = mpq(0)
_Q1 = mpq(1)


def _q(v) -> mpq:
    if type(v) is int:
        return mpq(v)
    return mpq(v.numerator, v.denominator)


def _f(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


class CertificateError(AssertionError):
    """A witness failed its own re-verification (an internal defect)."""


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: Optional[Fraction] = None
    primal_point: Optional[tuple] = None
    ray: Optional[tuple] = None
    farkas: Optional[tuple] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def unbounded(self) -> bool:
        return self.status == "unbounded"

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"


class _Tableau:
    def __init__(self, A, b, nonneg):
        m = len(A)
        n = len(nonneg)
        self.cols = []  # (variable, sign) for structural columns
        for j in range(n):
            self.cols.append((j, 1))
            if not nonneg[j]:
                self.cols.append((j, -1))
        ns = len(self.cols)
        self.n_struct = ns
        self.slack0 = ns
        n_art = sum(1 for bi in b if bi < 0)
        self.art0 = ns + m
        self.ncols = ns + m + n_art
        self.rows = []
        self.basis = []
        art = self.art0
        for i in range(m):
            row = [_Q0] * (self.ncols + 1)
            for k, (j, s) in enumerate(self.cols):
                a = A[i][j]
                if a:
                    row[k] = a if s > 0 else -a
            row[ns + i] = _Q1
            row[-1] = b[i]
            if b[i] < 0:
                row = [-x for x in row]
                row[art] = _Q1
                self.basis.append(art)
                art += 1
            else:
                self.basis.append(ns + i)
            self.rows.append(row)
        self.obj = [_Q0] * self.ncols
        self.value = _Q0

    def pivot(self, r, j):
        prow = self.rows[r]
        piv = prow[j]
        if piv != 1:
            prow = [x / piv for x in prow]
            self.rows[r] = prow
        nz = [k for k, x in enumerate(prow) if x]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        d = self.obj[j]
        if d:
            for k in nz:
                if k < self.ncols:
                    self.obj[k] -= d * prow[k]
            self.value += d * prow[-1]
        self.basis[r] = j

    def set_objective(self, costs):
        self.obj = list(costs)
        self.value = _Q0
        for i, bcol in enumerate(self.basis):
            cb = costs[bcol]
            if cb:
                row = self.rows[i]
                for k in range(self.ncols):
                    if row[k]:
                        self.obj[k] -= cb * row[k]
                self.value += cb * row[-1]

    def run(self, allowed):
        """Bland iterations; returns None when optimal or the unbounded column."""
        while True:
            j = next((k for k in range(self.ncols) if allowed[k] and self.obj[k] > 0), None)
            if j is None:
                return None
            best = None
            for i, row in enumerate(self.rows):
                a = row[j]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return j
            self.pivot(best[1], j)

    def column_values(self):
        u = [_Q0] * self.ncols
        for i, bcol in enumerate(self.basis):
            u[bcol] = self.rows[i][-1]
        return u

    def to_x(self, u, n):
        x = [_Q0] * n
        for k, (j, s) in enumerate(self.cols):
            if u[k]:
                x[j] += s * u[k]
        return tuple(_f(v) for v in x)


def _simplex(c, A, b, nonneg):
    n = len(nonneg)
    c = [_q(v) for v in c]
    A = [[_q(v) for v in row] for row in A]
    b = [_q(v) for v in b]
    tab = _Tableau(A, b, nonneg)
    if tab.ncols > tab.art0:
        costs = [_Q0] * tab.ncols
        for k in range(tab.art0, tab.ncols):
            costs[k] = -_Q1
        tab.set_objective(costs)
        tab.run([True] * tab.ncols)
        if tab.value < 0:
            return "infeasible", None, None, None
        # drive zero-level artificials out of the basis, dropping dependent rows
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= tab.art0:
                row = tab.rows[r]
                k = next((k for k in range(tab.art0) if row[k]), None)
                if k is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, k)
            r += 1
    costs = [_Q0] * tab.ncols
    for k, (j, s) in enumerate(tab.cols):
        costs[k] = c[j] if s > 0 else -c[j]
    tab.set_objective(costs)
    allowed = [k < tab.art0 for k in range(tab.ncols)]
    j = tab.run(allowed)
    u = tab.column_values()
    point = tab.to_x(u, n)
    if j is None:
        return "optimal", None, point, None
    r = [_Q0] * tab.ncols
    r[j] = _Q1
    for i, bcol in enumerate(tab.basis):
        r[bcol] = -tab.rows[i][j]
    return "unbounded", None, point, tab.to_x(r, n)


def _farkas(A, b, nonneg):
    """Multipliers y >= 0 with y^T A = 0 on free columns, >= 0 on
    non-negative columns, and y . b < 0."""
    m = len(A)
    n = len(nonneg)
    rows, rhs = [], []
    for j in range(n):
        col = [A[i][j] for i in range(m)]
        rows.append([-v for v in col])
        rhs.append(ZERO)
        if not nonneg[j]:
            rows.append(col)
            rhs.append(ZERO)
    rows.append(list(b))
    rhs.append(Fraction(-1))
    status, _, y, _ = _simplex([Fraction(-1)] * m, rows, rhs, [True] * m)
    if status != "optimal":
        raise CertificateError("Farkas system unexpectedly unsolvable")
    return y


def _check_feasible(A, b, nonneg, x):
    if any(nonneg[j] and x[j] < 0 for j in range(len(x))):
        return False
    return all(dot(A[i], x) <= b[i] for i in range(len(A)))


def solve_lp(c: Sequence, A: Sequence[Sequence], b: Sequence, nonneg: Sequence[bool],
             maximize: bool = True) -> LpOutcome:
    """Solve the LP exactly and return a verified :class:`LpOutcome`.

    ``value`` and ``ray`` are reported for the requested sense; for an
    unbounded problem ``primal_point`` holds a feasible starting point.
    """
    n = len(nonneg)
    c = [v if type(v) is int else Fraction(v) for v in c]
    if len(c) != n:
        raise ValueError(f"objective has length {len(c)}, expected {n}")
    for row in A:
        if len(row) != n:
            raise ValueError("constraint row has wrong length")
    A = [[v if type(v) is int else Fraction(v) for v in row] for row in A]
    b = [v if type(v) is int else Fraction(v) for v in b]
    internal_c = c if maximize else [-v for v in c]
    status, value, point, ray = _simplex(internal_c, A, b, list(nonneg))
    if status == "infeasible":
        y = _farkas(A, b, nonneg)
        ok = all(v >= 0 for v in y) and dot(y, b) < 0
        for j in range(n):
            s = sum((y[i] * A[i][j] for i in range(len(A))), ZERO)
            ok = ok and (s >= 0 if nonneg[j] else s == 0)
        if not ok:
            raise CertificateError("Farkas certificate failed re-verification")
        return LpOutcome("infeasible", farkas=tuple(y))
    if not _check_feasible(A, b, nonneg, point):
        raise CertificateError("simplex point violates its constraints")
    if status == "optimal":
        value = dot(c, point)
        return LpOutcome("optimal", value=value, primal_point=point)
    ray_ok = dot(internal_c, ray) > 0 and all(dot(row, ray) <= 0 for row in A) and \
        all(not nonneg[j] or ray[j] >= 0 for j in range(n))
    if not ray_ok:
        raise CertificateError("unbounded ray failed re-verification")
    return LpOutcome("unbounded", primal_point=point, ray=ray)
