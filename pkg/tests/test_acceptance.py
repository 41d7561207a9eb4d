"""Acceptance battery: one printed PASS/FAIL line per criterion."""
import json
import time
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from random import Random

import pytest

from conftest import FIXTURES
from instances import (make_priors, measure_on, random_box, random_gset, random_hset,
                       random_qset, random_rows)
from qsbipolar import cli, duality
from qsbipolar.core import FiniteSpace, InputError, PriorSet, diracs, support_positions
from qsbipolar.duality import (bipolar_ca, bipolar_diamond, bipolar_lifted,
                               bipolar_star_disjoint, check_bipolar_theorem)
from qsbipolar.finance import verify_dual_martingale
from qsbipolar.oracle import MembershipOracle, _h_generators, feasible_standard
from qsbipolar.polyhedra import FinitePointSet, HPolyhedron, same_set
from qsbipolar.scenario import load_scenario
from qsbipolar.sensitivity import build_aggregator, CoherentFamily, is_Q_stable, is_sensitive
from qsbipolar.sets import (RobustSet, is_closed_all_notions, is_convex, is_solid,
                            same_members, set_contains)
from qsbipolar.transport import (MarginalSystem, ProductModel, check_no_gap,
                                 marginal_polar_identity)

KINDS = ("diracs", "full", "mixed")


@contextmanager
def criterion(request, number, title, budget=None):
    """Print one verdict line for the criterion, bypassing output capture."""
    detail = {}
    start = time.perf_counter()
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(ok, text):
        with capman.global_and_fixture_disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {text}")

    try:
        yield detail
        elapsed = time.perf_counter() - start
        if budget is not None:
            detail["time"] = f"{elapsed:.1f}s of {budget}s"
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as exc:
        emit(False, f"{type(exc).__name__}: {exc}")
        raise
    emit(True, ", ".join(f"{k}={v}" for k, v in detail.items()))


@lru_cache(maxsize=None)
def corpus():
    """(S, Qset) pairs: 210 non-negative-row H-forms and 60 generator sets."""
    rng = Random(20240601)
    out = []
    for i in range(210):
        priors = make_priors(rng, 2 + i % 4)
        out.append((random_hset(rng, priors), random_qset(rng, priors, KINDS[i % 3])))
    for i in range(60):
        priors = make_priors(rng, 2 + i % 4)
        out.append((random_gset(rng, priors), random_qset(rng, priors, KINDS[i % 3])))
    return out


@lru_cache(maxsize=None)
def bipolar_reports():
    return [check_bipolar_theorem(S, Q) for S, Q in corpus()]


# -- independent substitution checks -------------------------------------------

def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def sup_at_most_one(body, mu) -> bool:
    """``<mu, X> <= 1`` on the body, checked on its vertices and rays."""
    if isinstance(body, FinitePointSet):
        return all(_dot(mu, p) <= 1 for p in body.points)
    verts, rays = _h_generators(body.resolved() if body.lifted_dims else body)
    return all(_dot(mu, v) <= 1 for v in verts) and all(_dot(mu, r) <= 0 for r in rays)


def in_image(S, supp, target) -> bool:
    """Some member of S agrees with the target on the given coordinates."""
    body = S.body
    if isinstance(body, FinitePointSet):
        return any(tuple(p[i] for i in supp) == target for p in body.points)
    k, rows = body.dim, body.constraints
    A, b = [], []
    for j, r in enumerate(rows):
        A.append(list(r.coeffs) + [1 if t == j else 0 for t in range(len(rows))])
        b.append(r.offset)
    for i, v in zip(supp, target):
        A.append([1 if t == i else 0 for t in range(k)] + [0] * len(rows))
        b.append(v)
    return feasible_standard(A, b)[0]


def recheck_bipolar(S, rep) -> int:
    """Re-verify every certificate in a report by substitution; count them."""
    if rep.equal:
        return 0
    w = rep.witness
    assert not S.contains_point(w) and rep.bipolar.contains_point(w)
    count = 1
    cert = rep.certificate
    if cert["kind"] == "separating_measure":
        mu = cert["measure"]
        assert all(v >= 0 for v in mu) and _dot(mu, w) > 1
        assert sup_at_most_one(S.body, mu)
        count += 1
    elif cert["kind"] == "convexity":
        x, y = cert["pair"]
        assert S.contains_point(x) and S.contains_point(y)
        assert w == tuple((a + b) / 2 for a, b in zip(x, y))
    elif cert["kind"] == "solidity":
        assert S.contains_point(cert["dominating"])
        assert all(a <= b for a, b in zip(w, cert["dominating"]))
    return count


def recheck_sensitivity(S, Qs, rep) -> int:
    if rep.sensitive:
        return 0
    w = rep.witness
    assert not S.contains_point(w) and all(v >= 0 for v in w)
    for Q in Qs:
        supp = support_positions(S.priors, Q)
        assert in_image(S, supp, tuple(w[i] for i in supp))
    return 1


# -- criteria ----------------------------------------------------------------

def test_criterion_1_bipolar_biconditional(request):
    with criterion(request, 1, "bipolar equality iff convex, solid, closed, sensitive",
                   120) as d:
        start = time.perf_counter()
        reports = bipolar_reports()
        hform = gen = equal = 0
        for (S, Qs), rep in zip(corpus(), reports):
            props = (is_convex(S)[0], is_solid(S)[0],
                     is_closed_all_notions(S, Qs).seq_order_closed,
                     is_sensitive(S, Qs).sensitive)
            assert rep.equal == same_members(S, bipolar_lifted(S, Qs))
            assert rep.equal == all(props), (S, Qs, props)
            hform += isinstance(S.body, HPolyhedron)
            gen += isinstance(S.body, FinitePointSet)
            equal += rep.equal
        assert hform >= 200 and gen >= 50
        assert 0 < equal < len(reports)
        d.update(hform=hform, generators=gen, equal=equal,
                 unequal=len(reports) - equal)


def test_criterion_2_oracle_equivalence(request):
    with criterion(request, 2, "bipolar_ca membership matches the brute-force oracle") as d:
        grid = [Fraction(v, 4) for v in range(9)]
        instances = probes = 0
        for S, _ in corpus():
            if S.dim > 3:
                continue
            hull = bipolar_ca(S)
            oracle = MembershipOracle(S, max_denominator=8)
            for X in product(grid, repeat=S.dim):
                assert hull.contains_point(X) == oracle.contains(X), (S, X)
                probes += 1
            instances += 1
        d.update(instances=instances, probes=probes, disagreements=0)


def test_criterion_3_diamond_collapse(request):
    with criterion(request, 3, "diamond bipolar equals lifted bipolar") as d:
        rng = Random(3)
        counts = {"diracs": 0, "full": 0, "mixed": 0}
        for i in range(120):
            priors = make_priors(rng, 2 + i % 3)
            S = random_hset(rng, priors) if i % 4 else random_gset(rng, priors)
            kind = KINDS[i % 3]
            Qs = random_qset(rng, priors, kind)
            lifted, dia = bipolar_lifted(S, Qs), bipolar_diamond(S, Qs)
            assert same_set(lifted.body, dia.body), (S, Qs)
            counts[kind] += 1
        assert counts["diracs"] >= 30 and counts["full"] >= 30
        d.update(instances=sum(counts.values()), **counts)


def test_criterion_4_star_disjoint(request):
    with criterion(request, 4, "star bipolar equals lifted bipolar on disjoint supports") as d:
        rng = Random(4)
        n = rejected = 0
        for i in range(60):
            priors = make_priors(rng, 2 + i % 4)
            S = random_hset(rng, priors) if i % 3 else random_gset(rng, priors)
            Qs = diracs(priors)
            Qs = tuple(rng.sample(Qs, rng.randint(1, len(Qs))))
            star = bipolar_star_disjoint(S, Qs)
            assert same_set(star.body, bipolar_lifted(S, Qs).body)
            n += 1
            atoms = priors.nonpolar_atoms
            overlap = (measure_on(rng, priors.space, atoms[:2]),
                       measure_on(rng, priors.space, atoms[1:]))
            with pytest.raises(InputError):
                bipolar_star_disjoint(S, overlap)
            rejected += 1
        assert n >= 50
        d.update(instances=n, overlapping_rejected=rejected)


def test_criterion_5_reduction_monotonicity(request):
    with criterion(request, 5, "lifting by Diracs is exact and more models shrink the bipolar") as d:
        rng = Random(5)
        chains = exact = 0
        for i in range(60):
            priors = make_priors(rng, 2 + i % 4)
            S = random_box(rng, priors) if i % 2 else random_hset(rng, priors)
            D = diracs(priors)
            if is_sensitive(S, D).sensitive:
                assert same_members(bipolar_lifted(S, D), S)
                exact += 1
            Q2 = random_qset(rng, priors, "mixed") + tuple(rng.sample(D, rng.randint(0, len(D))))
            Q1 = tuple(rng.sample(Q2, rng.randint(1, len(Q2))))
            small, big = bipolar_lifted(S, Q2), bipolar_lifted(S, Q1)
            assert set_contains(big, small).contained
            chains += 1
        assert chains >= 50 and exact >= 25
        d.update(chains=chains, dirac_exact=exact)


def test_criterion_6_closedness_battery(request):
    with criterion(request, 6, "closedness notions agree on solid sensitive sets") as d:
        rng = Random(6)
        n = 0
        for i in range(110):
            priors = make_priors(rng, 2 + i % 4)
            S = random_hset(rng, priors) if i % 3 else random_box(rng, priors)
            Qs = random_qset(rng, priors, "full") + random_qset(rng, priors, "mixed")
            assert is_solid(S)[0] and is_sensitive(S, Qs).sensitive
            rec = is_closed_all_notions(S, Qs)
            assert rec.all_agree and rec.equivalence_asserted, rec
            n += 1
        d.update(instances=n)


def test_criterion_7_aggregation_sensitivity(request):
    with criterion(request, 7, "stability decided by sensitivity matches the family probe") as d:
        sc = load_scenario(FIXTURES / "stability.json")
        Qs = sc.qset("diracs")
        box = is_Q_stable(sc.sets["unit_box"], Qs)
        ind = is_Q_stable(sc.sets["indicators"], Qs)
        assert box.stable and box.sampled_stable
        assert not ind.stable and not ind.sampled_stable
        assert ind.witness == (1, 1, 1)
        assert not sc.sets["indicators"].contains_point((1, 1, 1))
        rng = Random(7)
        n, unstable = 2, 0
        for i in range(110):
            priors = make_priors(rng, 2 + i % 3)
            S = random_gset(rng, priors) if i % 2 else random_hset(rng, priors, 3)
            Qs = random_qset(rng, priors, KINDS[i % 3])
            rep = is_Q_stable(S, Qs)
            assert rep.stable == rep.sampled_stable == is_sensitive(S, Qs).sensitive
            unstable += not rep.stable
            n += 1
        assert n >= 100 and 0 < unstable < n
        d.update(pairs=n, unstable=unstable)


def test_criterion_8_superhedging_dual(request):
    with criterion(request, 8, "superhedging polar probabilities equal the martingale measures",
                   10) as d:
        F = Fraction
        bino = verify_dual_martingale(load_scenario(FIXTURES / "binomial.json").market)
        assert bino.match and bino.polar_vertices == ((F(1, 3), F(2, 3)),)
        assert same_set(bino.polar_probabilities, bino.martingale)
        arb = verify_dual_martingale(load_scenario(FIXTURES / "arbitrage.json").market)
        assert arb.match and arb.polar_probabilities.is_empty() and arb.martingale.is_empty()
        tri = verify_dual_martingale(load_scenario(FIXTURES / "trinomial.json").market)
        assert tri.match and same_set(tri.polar_probabilities, tri.martingale)
        d.update(binomial="{(1/3, 2/3)}", arbitrage="empty",
                 trinomial_vertices=len(tri.martingale_vertices))


def _transport_case(sys, C1, C2, goal):
    rep = check_no_gap(goal, sys)
    assert rep.dual_value >= rep.primal_value
    assert rep.gap_zero and rep.primal_value == rep.dual_value
    assert rep.C_equals_D and same_set(rep.C, rep.D) and rep.polar_identity
    if rep.optimal_mu is not None:
        assert sys.product_polyhedron().contains_point(rep.optimal_mu)
        assert _dot(goal, rep.optimal_mu) == rep.primal_value
    ident = marginal_polar_identity(sys, C1, C2, split=rep.C)
    assert ident.holds
    return len(ident.probes)


def test_criterion_9_transport_duality(request):
    with criterion(request, 9, "transport duality, C = D and the marginal identity", 60) as d:
        fixtures = probes = 0
        for name in ("mass_total", "mass_off_set"):
            block = load_scenario(FIXTURES / f"{name}.json").transport
            for goal in block.goals:
                probes += _transport_case(block.system, block.C1, block.C2, goal)
                fixtures += 1
        rng = Random(9)
        systems = 0
        for i in range(56):
            n = 2 if i % 2 else 3
            P1 = PriorSet.all_diracs(FiniteSpace(tuple(f"a{j}" for j in range(n))))
            P2 = PriorSet.all_diracs(FiniteSpace(tuple(f"b{j}" for j in range(n))))
            C1 = RobustSet(P1, HPolyhedron.from_rows(*_marginal_rows(rng, n)))
            C2 = RobustSet(P2, HPolyhedron.from_rows(*_marginal_rows(rng, n)))
            sys = MarginalSystem.from_sets(ProductModel(P1, P2), C1, C2)
            goal = tuple(rng.randint(0, 3) for _ in range(n * n))
            probes += _transport_case(sys, C1, C2, goal)
            systems += 1
        assert systems >= 50
        d.update(fixture_goals=fixtures, random_systems=systems, identity_probes=probes)


def _marginal_rows(rng, n):
    rows, offsets = [], []
    for _ in range(rng.randint(1, 2)):
        row = [rng.randint(0, 2) for _ in range(n)]
        if not any(row):
            row[rng.randrange(n)] = 1
        rows.append(row)
        offsets.append(rng.randint(1, 2))
    return rows, offsets


def test_criterion_10_certificate_soundness(request, monkeypatch, capsys):
    with criterion(request, 10, "every emitted certificate re-verifies by substitution") as d:
        certs = 0
        for (S, Qs), rep in zip(corpus(), bipolar_reports()):
            certs += recheck_bipolar(S, rep)
            certs += recheck_sensitivity(S, Qs, is_sensitive(S, Qs))
        rng = Random(10)
        for i in range(60):
            priors = make_priors(rng, 2 + i % 3)
            S = random_gset(rng, priors)
            Qs = random_qset(rng, priors, KINDS[i % 3])
            rep = is_Q_stable(S, Qs)
            if rep.witness is None:
                continue
            assert not S.contains_point(rep.witness)
            assert all(S.contains_point(X) for X in rep.family)
            for Q, X in zip(Qs, rep.family):
                assert all(rep.witness[p] == X[p] for p in support_positions(priors, Q))
            certs += 1
        codes = {}
        for name in ("two_point", "all_diracs", "sensitive_sets"):
            codes[name] = cli.main(["check-bipolar", "--scenario", str(FIXTURES / f"{name}.json")])
        capsys.readouterr()
        assert set(codes.values()) <= {0, 1}
        monkeypatch.setattr(duality, "separating_measure", lambda S, X: (0,) * len(X))
        code = cli.main(["check-bipolar", "--scenario", str(FIXTURES / "all_diracs.json")])
        err = capsys.readouterr()
        assert code == 3, err
        assert json.loads(err.out)["error"]
        d.update(certificates=certs, failures=0, fault_injection_exit=code)
