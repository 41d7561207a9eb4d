"""Finite discrete-time markets: superhedging sets, martingale measures and
robust acceptance sets."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

from .core import (
    Event,
    FiniteSpace,
    InputError,
    PriorSet,
    check_model_measure,
    support_positions,
)
from .duality import polar_ca, polar_ks
from .polyhedra import (
    CertificateError,
    HPolyhedron,
    LinearFunctional,
    contains,
    cylinder,
    lp_optimize,
    vertices,
)
from .rational import ONE, ZERO, dot, frac, vec
from .sensitivity import is_sensitive
from .sets import RobustSet, intersect_sets, is_solid


def _as_event(space: FiniteSpace, block) -> Event:
    if isinstance(block, Event):
        return block
    return Event(frozenset(b if isinstance(b, int) else space.index(b) for b in block))


@dataclass(frozen=True)
class MarketModel:
    """Discounted prices on a finite filtered space.

    ``filtration[t]`` is a partition of the atoms (a tuple of events) and
    ``prices[d][t]`` holds the price of asset ``d`` at time ``t`` per atom.
    """

    space: FiniteSpace
    filtration: tuple
    prices: tuple
    priors: PriorSet

    def __post_init__(self):
        n = self.space.n
        parts = tuple(tuple(_as_event(self.space, b) for b in part) for part in self.filtration)
        if len(parts) < 2:
            raise InputError("a market needs at least one trading period")
        everything = frozenset(range(n))
        for t, part in enumerate(parts):
            seen = set()
            for block in part:
                if not block.members:
                    raise InputError(f"empty block in partition {t}")
                if seen & block.members:
                    raise InputError(f"overlapping blocks in partition {t}")
                seen |= block.members
            if seen != everything:
                raise InputError(f"partition {t} does not cover the atoms")
        if len(parts[0]) != 1:
            raise InputError("the first partition must be trivial")
        for t in range(1, len(parts)):
            for block in parts[t]:
                if not any(block.members <= up.members for up in parts[t - 1]):
                    raise InputError(f"partition {t} does not refine partition {t - 1}")
        prices = tuple(tuple(vec(s) for s in asset) for asset in self.prices)
        if not prices:
            raise InputError("a market needs at least one asset")
        for d, asset in enumerate(prices):
            if len(asset) != len(parts):
                raise InputError(f"asset {d} needs one price vector per time")
            for t, s in enumerate(asset):
                if len(s) != n:
                    raise InputError(f"price of asset {d} at time {t} has the wrong length")
                for block in parts[t]:
                    if len({s[i] for i in block.members}) != 1:
                        raise InputError(
                            f"price of asset {d} at time {t} is not constant on a block")
        if self.priors.space != self.space:
            raise InputError("priors live on a different space")
        object.__setattr__(self, "filtration", parts)
        object.__setattr__(self, "prices", prices)

    @classmethod
    def from_blocks(cls, space, filtration, block_prices, priors) -> "MarketModel":
        """Build from per-block price values, listed in the partition's block order."""
        parts = [[_as_event(space, b) for b in part] for part in filtration]
        prices = []
        for asset in block_prices:
            if len(asset) != len(parts):
                raise InputError("one list of block prices per time is required")
            per_time = []
            for part, values in zip(parts, asset):
                if len(values) != len(part):
                    raise InputError("one price per block is required")
                s = [ZERO] * space.n
                for block, v in zip(part, values):
                    for i in block.members:
                        s[i] = frac(v)
                per_time.append(tuple(s))
            prices.append(tuple(per_time))
        return cls(space, tuple(tuple(p) for p in parts), tuple(prices), priors)

    @property
    def horizon(self) -> int:
        return len(self.filtration) - 1

    @property
    def assets(self) -> int:
        return len(self.prices)

    def increment(self, d: int, t: int) -> tuple:
        """``S_{t+1} - S_t`` of asset ``d``, per atom."""
        return tuple(a - b for a, b in zip(self.prices[d][t + 1], self.prices[d][t]))


@dataclass(frozen=True)
class StrategySpace:
    """Index of the predictable position variables ``h[t, d, block]``."""

    market: MarketModel
    index: tuple  # of (t, d, block position)

    @classmethod
    def of(cls, market: MarketModel) -> "StrategySpace":
        idx = tuple((t, d, b)
                    for t in range(market.horizon)
                    for d in range(market.assets)
                    for b in range(len(market.filtration[t])))
        return cls(market, idx)

    @property
    def size(self) -> int:
        return len(self.index)

    def gains_row(self, atom: int) -> tuple:
        """Coefficients of the terminal gain ``sum_t h_t . dS_t`` at ``atom``."""
        m = self.market
        row = []
        for t, d, b in self.index:
            block = m.filtration[t][b]
            row.append(m.increment(d, t)[atom] if atom in block.members else ZERO)
        return tuple(row)


def superhedge_set(market: MarketModel) -> RobustSet:
    """Claims superhedged from unit capital: ``X <= 1 + (H.S)_T`` for some
    predictable ``H``, with the strategy variables projected out."""
    priors = market.priors
    strat = StrategySpace.of(market)
    rows = []
    for pos, atom in enumerate(priors.nonpolar_atoms):
        e = [ZERO] * priors.k
        e[pos] = ONE
        rows.append(LinearFunctional(tuple(e) + tuple(-g for g in strat.gains_row(atom)), ONE))
    lifted = HPolyhedron(priors.k, tuple(rows), True, strat.size)
    body = lifted.canonical()
    if not body.contains_point((ONE,) * priors.k):
        raise CertificateError("the zero strategy does not superhedge the unit claim")
    return RobustSet(priors, body, "derived")


def martingale_measures(market: MarketModel) -> HPolyhedron:
    """Dominated probabilities (on non-polar coordinates) making every price a martingale."""
    priors = market.priors
    k = priors.k
    nonpolar = priors.nonpolar_atoms
    ones = (ONE,) * k
    rows = [LinearFunctional(ones, ONE), LinearFunctional(tuple(-v for v in ones), -ONE)]
    for t in range(market.horizon):
        for d in range(market.assets):
            inc = market.increment(d, t)
            for block in market.filtration[t]:
                c = tuple(inc[a] if a in block.members else ZERO for a in nonpolar)
                if any(c):
                    rows.append(LinearFunctional(c, ZERO))
                    rows.append(LinearFunctional(tuple(-v for v in c), ZERO))
    return HPolyhedron(k, tuple(rows), True, 0)


def _probabilities(poly: HPolyhedron) -> HPolyhedron:
    ones = (ONE,) * poly.dim
    return poly.with_constraints((LinearFunctional(ones + (ZERO,) * poly.lifted_dims, ONE),
                                  LinearFunctional((-ONE,) * poly.dim
                                                   + (ZERO,) * poly.lifted_dims, -ONE)))


@dataclass(frozen=True)
class DualMartingaleReport:
    match: bool
    superhedge: RobustSet
    polar_probabilities: HPolyhedron
    martingale: HPolyhedron
    polar_vertices: tuple
    martingale_vertices: tuple
    witness: Optional[tuple] = None
    witness_side: Optional[str] = None


def _martingale_defect(market: MarketModel, q) -> bool:
    M = martingale_measures(market)
    return not M.contains_point(q)


def _superhedge_price_exceeds(C: RobustSet, q) -> bool:
    out = lp_optimize(tuple(q), C.body)
    return not out.optimal or out.value > 1


def verify_dual_martingale(market: MarketModel) -> DualMartingaleReport:
    """Compare the probabilities in the polar of the superhedging set with
    the martingale measures, both ways, with verified counterexamples."""
    C = superhedge_set(market)
    P = _probabilities(polar_ca(C).poly).canonical()
    M = martingale_measures(market).canonical()
    witness, side = None, None
    fwd = contains(M, P)
    if not fwd:
        witness, side = fwd.witness, "polar_not_martingale"
        if not _martingale_defect(market, witness) or _superhedge_price_exceeds(C, witness):
            raise CertificateError("polar probability counterexample failed re-verification")
    else:
        back = contains(P, M)
        if not back:
            witness, side = back.witness, "martingale_not_polar"
            if _martingale_defect(market, witness) or not _superhedge_price_exceeds(C, witness):
                raise CertificateError("martingale counterexample failed re-verification")
    pv, mv = tuple(vertices(P)), tuple(vertices(M))
    match = witness is None
    if match and pv != mv:
        raise CertificateError("equal polytopes produced different vertex lists")
    return DualMartingaleReport(match, C, P, M, pv, mv, witness, side)


# -- acceptance sets ----------------------------------------------------------

@dataclass(frozen=True)
class AcceptanceSpec:
    """Per model ``Q`` an acceptance region over the support coordinates of ``Q``."""

    entries: tuple  # of (Q, HPolyhedron)

    def __post_init__(self):
        if not self.entries:
            raise InputError("an acceptance specification needs at least one model")
        object.__setattr__(self, "entries", tuple((Q, A) for Q, A in self.entries))


def _sample_points(k: int) -> list:
    levels = (ZERO, frac("1/2"), ONE, frac(2))
    if k <= 3:
        return [tuple(p) for p in product(levels, repeat=k)]
    pts = [(ZERO,) * k]
    for lv in levels[1:]:
        pts.append((lv,) * k)
        for i in range(k):
            e = [ZERO] * k
            e[i] = lv
            pts.append(tuple(e))
    return pts


def _dual_accepts(ks, X) -> bool:
    """``E_Q[Z X] <= 1`` for every model ``Q`` and admissible density ``Z``."""
    nonpolar = ks.priors.nonpolar_atoms
    for Q, supp, F in ks.entries:
        objective = tuple(Q.weights[nonpolar[p]] * X[p] for p in supp)
        out = lp_optimize(objective, F)
        if out.infeasible:
            continue
        if not out.optimal or out.value > 1:
            return False
    return True


def acceptance_set(spec: AcceptanceSpec, priors: PriorSet, samples: Sequence = ()) -> RobustSet:
    """Claims accepted by every model: the orthant cut by one cylinder per model.

    When every region is solid, membership is re-derived on sample points
    from the per-model dual tests and must agree with the primal set.
    """
    Qs, pieces = [], []
    for Q, A in spec.entries:
        Q = check_model_measure(priors, Q)
        supp = support_positions(priors, Q)
        if A.dim != len(supp):
            raise InputError("acceptance region does not match the model's support")
        Qs.append(Q)
        pieces.append(RobustSet(priors, cylinder(A, supp, priors.k), "constraints"))
    out = intersect_sets(pieces)
    out = RobustSet(priors, out.body, "constraints")
    rep = is_sensitive(out, Qs)
    if not rep.sensitive:
        raise AssertionError("an intersection of model cylinders must be sensitive")
    if out.is_empty() or not all(is_solid(p)[0] for p in pieces):
        return out
    ks = polar_ks(out, Qs)
    points = [vec(s) for s in samples] or _sample_points(priors.k)
    for X in points:
        if out.contains_point(X) != _dual_accepts(ks, X):
            raise CertificateError(f"dual tests disagree with the acceptance set at {X}")
    return out
