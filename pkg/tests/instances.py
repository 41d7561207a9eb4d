"""Seeded random instances shared by the acceptance checks."""
from fractions import Fraction
from random import Random

from qsbipolar.core import FiniteSpace, PriorSet, ProbabilityMeasure
from qsbipolar.polyhedra import HPolyhedron
from qsbipolar.sets import RobustSet, from_generators

HALVES = [Fraction(v, 2) for v in range(5)]


def make_priors(rng: Random, k: int) -> PriorSet:
    """k non-polar atoms, sometimes followed by a polar atom; the priors are
    either the Diracs or a couple of measures jointly charging every atom."""
    polar = rng.random() < 0.3
    labels = tuple(f"w{i}" for i in range(k + polar))
    space = FiniteSpace(labels)
    if rng.random() < 0.5:
        gens = tuple(space.dirac(i) for i in range(k))
    else:
        cut = rng.randint(1, k)
        gens = (measure_on(rng, space, range(cut)), measure_on(rng, space, range(cut - 1, k)))
    return PriorSet(space, gens)


def measure_on(rng: Random, space: FiniteSpace, atoms) -> ProbabilityMeasure:
    atoms = list(atoms)
    w = [rng.randint(1, 4) for _ in atoms]
    total = sum(w)
    weights = [Fraction(0)] * space.n
    for a, v in zip(atoms, w):
        weights[a] = Fraction(v, total)
    return ProbabilityMeasure(tuple(weights))


def random_qset(rng: Random, priors: PriorSet, kind: str) -> tuple:
    """``diracs``: point masses on some non-polar atoms (always covering them);
    ``full``: one or two full-support measures; ``mixed``: random supports."""
    atoms = list(priors.nonpolar_atoms)
    space = priors.space
    if kind == "diracs":
        return tuple(space.dirac(a) for a in atoms)
    if kind == "full":
        return tuple(measure_on(rng, space, atoms) for _ in range(rng.randint(1, 2)))
    out = []
    for _ in range(rng.randint(1, 3)):
        size = rng.randint(1, len(atoms))
        out.append(measure_on(rng, space, sorted(rng.sample(atoms, size))))
    return tuple(out)


def random_rows(rng: Random, k: int, max_rows: int = 6, coeff_max: int = 3):
    rows, offsets = [], []
    for _ in range(rng.randint(1, max_rows)):
        row = [rng.randint(0, coeff_max) for _ in range(k)]
        if not any(row):
            row[rng.randrange(k)] = 1
        rows.append(row)
        offsets.append(rng.randint(1, 4))
    return rows, offsets


def random_hset(rng: Random, priors: PriorSet, max_rows: int = 6) -> RobustSet:
    rows, offsets = random_rows(rng, priors.k, max_rows)
    return RobustSet(priors, HPolyhedron.from_rows(rows, offsets))


def random_gset(rng: Random, priors: PriorSet) -> RobustSet:
    pts = {tuple(rng.choice(HALVES) for _ in range(priors.k)) for _ in range(rng.randint(1, 4))}
    return from_generators(priors, sorted(pts))


def random_box(rng: Random, priors: PriorSet) -> RobustSet:
    return RobustSet(priors, HPolyhedron.box([rng.randint(1, 4) for _ in range(priors.k)]))
