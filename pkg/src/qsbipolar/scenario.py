"""Scenario files: JSON with exact rational strings, optionally preceded by a
TOML front-matter block delimited by ``+++`` lines.

Every parse error is raised as :class:`InputError` whose message starts with
the location of the offending value, e.g. ``sets.S.constraints[1].bound``.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .duality import polar_ca
from .core import FiniteSpace, InputError, PriorSet, ProbabilityMeasure, diracs
from .finance import MarketModel
from .polyhedra import HPolyhedron
from .sensitivity import CoherentFamily
from .sets import RobustSet, from_constraints, from_generators
from .transport import MarginalSystem, ProductModel

BUILTIN_QSETS = ("diracs", "priors")
SET_FORMS = ("constraints", "generators", "box", "rows")


class _Floats(ValueError):
    pass


def _no_float(text):
    raise _Floats(text)


def _fail(where: str, msg: str):
    raise InputError(f"{where}: {msg}")


def _rational(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        _fail(where, f"expected an integer or a \"p/q\" string, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    text = value.strip()
    num, _, den = text.partition("/")
    try:
        if den and int(den) <= 0:
            _fail(where, f"denominator must be positive in {value!r}")
        if "." in text or "e" in text.lower():
            raise ValueError
        return Fraction(int(num), int(den)) if den else Fraction(int(num))
    except ValueError:
        _fail(where, f"not an exact rational: {value!r}")


def _vector(value, where: str, length: Optional[int] = None) -> tuple:
    if not isinstance(value, list):
        _fail(where, "expected a list of rationals")
    out = tuple(_rational(v, f"{where}[{i}]") for i, v in enumerate(value))
    if length is not None and len(out) != length:
        _fail(where, f"expected {length} entries, got {len(out)}")
    return out


def _get(block: dict, key: str, where: str):
    if not isinstance(block, dict):
        _fail(where, "expected an object")
    if key not in block:
        _fail(where, f"missing required key {key!r}")
    return block[key]


def _guard(where: str, build):
    """Run a library constructor, prefixing its input errors with ``where``."""
    try:
        return build()
    except InputError as exc:
        if str(exc).startswith(where):
            raise
        raise InputError(f"{where}: {exc}") from None


# -- raw text -------------------------------------------------------------------

def split_front_matter(text: str):
    """``(toml_text or None, json_text)``."""
    lines = text.splitlines(keepends=True)
    if not lines or lines[0].strip() != "+++":
        return None, text
    for i in range(1, len(lines)):
        if lines[i].strip() == "+++":
            return "".join(lines[1:i]), "".join(lines[i + 1:])
    _fail("front matter", "unterminated +++ block")


def load_raw(text: str) -> dict:
    front, body = split_front_matter(text)
    data = {}
    if front is not None:
        try:
            data = tomllib.loads(front, parse_float=_no_float)
        except _Floats as exc:
            _fail("front matter", f"floating-point value {exc} is not allowed")
        except tomllib.TOMLDecodeError as exc:
            _fail("front matter", str(exc))
    if body.strip():
        try:
            rest = json.loads(body, parse_float=_no_float)
        except _Floats as exc:
            _fail("json", f"floating-point value {exc} is not allowed; write \"p/q\"")
        except json.JSONDecodeError as exc:
            _fail(f"json line {exc.lineno} column {exc.colno}", exc.msg)
        if not isinstance(rest, dict):
            _fail("json", "the top level must be an object")
        for key in rest:
            if key in data:
                _fail(key, "defined both in the front matter and in the JSON body")
        data.update(rest)
    return data


# -- scenario -------------------------------------------------------------------

@dataclass(frozen=True)
class TransportBlock:
    system: MarginalSystem
    C1: Optional[RobustSet]
    C2: Optional[RobustSet]
    goals: tuple


@dataclass(frozen=True)
class Scenario:
    space: FiniteSpace
    priors: PriorSet
    sets: dict = field(default_factory=dict)
    qsets: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    market: Optional[MarketModel] = None
    transport: Optional[TransportBlock] = None
    checks: tuple = ()

    def qset(self, name: str, where: str = "qset") -> tuple:
        """Resolve a reduction-set name: ``diracs``, ``priors``, a named qset
        or ``file:PATH``."""
        if name == "diracs":
            return diracs(self.priors)
        if name == "priors":
            return tuple(self.priors.generators)
        if name.startswith("file:"):
            path = name[5:]
            try:
                raw = load_raw(Path(path).read_text())
            except OSError as exc:
                _fail(where, f"cannot read {path}: {exc.strerror}")
            measures = raw.get("qset", raw.get("measures"))
            if measures is None:
                _fail(path, "expected a \"qset\" list of measures")
            return _measures(measures, self.space.n, f"{path}.qset")
        if name not in self.qsets:
            _fail(where, f"unknown qset {name!r}")
        return self.qsets[name]


def _space(raw, where: str) -> FiniteSpace:
    if not isinstance(raw, list) or not all(isinstance(a, str) for a in raw):
        _fail(where, "expected a list of atom labels")
    return _guard(where, lambda: FiniteSpace(tuple(raw)))


def _measures(raw, n: int, where: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        _fail(where, "expected a non-empty list of probability vectors")
    return tuple(_guard(f"{where}[{i}]", lambda v=v, i=i:
                        ProbabilityMeasure(_vector(v, f"{where}[{i}]", n)))
                 for i, v in enumerate(raw))


def _priors(raw, space: FiniteSpace, where: str) -> PriorSet:
    if raw == "diracs":
        return PriorSet.all_diracs(space)
    return _guard(where, lambda: PriorSet(space, _measures(raw, space.n, where)))


def parse_set(raw, priors: PriorSet, where: str) -> RobustSet:
    """One set block; generator, box and row coordinates are the non-polar
    atoms, constraint measures range over every atom."""
    if not isinstance(raw, dict):
        _fail(where, "expected an object")
    forms = [f for f in SET_FORMS if f in raw]
    if len(forms) != 1:
        _fail(where, f"give exactly one of {', '.join(SET_FORMS)}")
    form = forms[0]
    k, n = priors.k, priors.space.n
    loc = f"{where}.{form}"
    body = raw[form]
    if form == "constraints":
        if not isinstance(body, list):
            _fail(loc, "expected a list")
        cons = []
        for i, c in enumerate(body):
            cw = f"{loc}[{i}]"
            cons.append((_vector(_get(c, "measure", cw), f"{cw}.measure", n),
                         _rational(_get(c, "bound", cw), f"{cw}.bound")))
        return _guard(loc, lambda: from_constraints(priors, cons))
    if form == "generators":
        if not isinstance(body, list) or not body:
            _fail(loc, "expected a non-empty list of points")
        pts = [_vector(p, f"{loc}[{i}]", k) for i, p in enumerate(body)]
        return _guard(loc, lambda: from_generators(priors, pts))
    if form == "box":
        upper = _vector(body, loc, k)
        if any(v < 0 for v in upper):
            _fail(loc, "box bounds must be non-negative")
        return RobustSet(priors, HPolyhedron.box(upper), "constraints")
    rows = body
    if not isinstance(rows, list):
        _fail(loc, "expected a list of rows")
    offsets = _vector(_get(raw, "offsets", where), f"{where}.offsets", len(rows))
    mat = [_vector(r, f"{loc}[{i}]", k) for i, r in enumerate(rows)]
    return _guard(loc, lambda: RobustSet(priors, HPolyhedron.from_rows(mat, offsets), "constraints"))


def _market(raw, space: FiniteSpace, priors: PriorSet, where: str) -> MarketModel:
    filt = _get(raw, "filtration", where)
    if not isinstance(filt, list):
        _fail(f"{where}.filtration", "expected a list of partitions")
    for t, part in enumerate(filt):
        pw = f"{where}.filtration[{t}]"
        if not isinstance(part, list) or not all(
                isinstance(b, list) and all(isinstance(a, str) for a in b) for b in part):
            _fail(pw, "expected a list of blocks of atom labels")
        for b in part:
            for a in b:
                _guard(pw, lambda a=a: space.index(a))
    prices = _get(raw, "prices", where)
    if not isinstance(prices, list):
        _fail(f"{where}.prices", "expected one list per asset")
    block_prices = []
    for d, asset in enumerate(prices):
        aw = f"{where}.prices[{d}]"
        if not isinstance(asset, list):
            _fail(aw, "expected one list of block prices per time")
        block_prices.append([_vector(v, f"{aw}[{t}]") for t, v in enumerate(asset)])
    return _guard(where, lambda: MarketModel.from_blocks(space, filt, block_prices, priors))


def _marginal(raw, side: int, priors: PriorSet, where: str):
    """``(set or None, measure polyhedron or None)`` for one marginal."""
    has_c, has_m = f"C{side}" in raw, f"M{side}" in raw
    if has_c == has_m:
        _fail(where, f"give exactly one of C{side} or M{side}")
    if has_c:
        return parse_set(raw[f"C{side}"], priors, f"{where}.C{side}"), None
    M = parse_set(raw[f"M{side}"], priors, f"{where}.M{side}")
    if not isinstance(M.body, HPolyhedron):
        _fail(f"{where}.M{side}", "marginal measure sets must be given by constraints")
    return None, M.body


def _transport(raw, where: str) -> TransportBlock:
    s1 = _space(_get(raw, "space1", where), f"{where}.space1")
    s2 = _space(_get(raw, "space2", where), f"{where}.space2")
    p1 = _priors(raw.get("priors1", "diracs"), s1, f"{where}.priors1")
    p2 = _priors(raw.get("priors2", "diracs"), s2, f"{where}.priors2")
    model = _guard(where, lambda: ProductModel(p1, p2))
    C1, M1 = _marginal(raw, 1, p1, where)
    C2, M2 = _marginal(raw, 2, p2, where)
    if C1 is not None and C2 is not None:
        system = _guard(where, lambda: MarginalSystem.from_sets(model, C1, C2))
    else:
        M1 = M1 if M1 is not None else polar_ca(C1).poly
        M2 = M2 if M2 is not None else polar_ca(C2).poly
        system = _guard(where, lambda: MarginalSystem(model, M1, M2))
    goals = raw.get("goals", [])
    if not isinstance(goals, list):
        _fail(f"{where}.goals", "expected a list of goal vectors")
    gs = tuple(_vector(g, f"{where}.goals[{i}]", model.k) for i, g in enumerate(goals))
    for i, g in enumerate(gs):
        if any(v < 0 for v in g):
            _fail(f"{where}.goals[{i}]", "goals must be non-negative")
    return TransportBlock(system, C1, C2, gs)


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        _fail("scenario", "the top level must be an object")
    space = _space(_get(data, "space", "scenario"), "space")
    priors = _priors(_get(data, "priors", "scenario"), space, "priors")
    k = priors.k

    qsets = {}
    for name, raw in _named(data, "qsets"):
        if name in BUILTIN_QSETS or name.startswith("file:"):
            _fail(f"qsets.{name}", "this name is reserved")
        qsets[name] = _measures(raw, space.n, f"qsets.{name}")
    scen = Scenario(space, priors, qsets=qsets)

    sets = {name: parse_set(raw, priors, f"sets.{name}") for name, raw in _named(data, "sets")}
    families = {}
    for name, raw in _named(data, "families"):
        where = f"families.{name}"
        Qs = scen.qset(_get(raw, "qset", where), f"{where}.qset")
        values = _get(raw, "values", where)
        if not isinstance(values, list) or len(values) != len(Qs):
            _fail(f"{where}.values", f"expected one vector per model ({len(Qs)})")
        vals = [_vector(v, f"{where}.values[{i}]", k) for i, v in enumerate(values)]
        fam = _guard(where, lambda: CoherentFamily(priors, tuple(zip(Qs, vals))))
        fill = _vector(raw["fill"], f"{where}.fill", k) if "fill" in raw else None
        families[name] = (fam, fill)
    points = {name: _vector(raw, f"points.{name}", k) for name, raw in _named(data, "points")}
    market = _market(data["market"], space, priors, "market") if "market" in data else None
    transport = _transport(data["transport"], "transport") if "transport" in data else None

    checks = data.get("checks", [])
    if not isinstance(checks, list):
        _fail("checks", "expected a list")
    parsed = []
    for i, c in enumerate(checks):
        where = f"checks[{i}]"
        cmd = _get(c, "command", where)
        for key, pool in (("set", sets), ("family", families)):
            if key in c and c[key] not in pool:
                _fail(f"{where}.{key}", f"unknown {key} {c[key]!r}")
        if "qset" in c:
            scen.qset(c["qset"], f"{where}.qset")
        if "points" in c:
            for j, p in enumerate(c["points"]):
                if isinstance(p, str):
                    if p not in points:
                        _fail(f"{where}.points[{j}]", f"unknown point {p!r}")
                else:
                    _vector(p, f"{where}.points[{j}]", k)
        parsed.append(dict(c, command=cmd))
    return Scenario(space, priors, sets, qsets, families, points, market, transport,
                    tuple(parsed))


def _named(data: dict, key: str):
    block = data.get(key, {})
    if not isinstance(block, dict):
        _fail(key, "expected an object of named entries")
    return list(block.items())


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        _fail(str(path), f"cannot read scenario: {exc.strerror}")
    return parse_scenario(load_raw(text))
