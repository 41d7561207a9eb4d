"""Command-line front end: load a scenario, run one command over its targets,
re-verify every witness and print a deterministic report.

Exit codes: 0 every asserted property holds, 1 a property fails (the report
carries the certificate), 2 input error, 3 a certificate failed
re-verification or an internal consistency check tripped.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import product

from . import duality, finance, oracle, sensitivity, transport
from .core import InputError, support_positions
from .polyhedra import CertificateError, FinitePointSet, HPolyhedron, lp_optimize
from .rational import ONE, ZERO, dot, fmt, fmt_vec, vec
from .scenario import Scenario, load_scenario
from .sets import PolyUnion, RobustSet

COMMANDS = ("polar", "bipolar", "check-bipolar", "sensitivity", "aggregate",
            "superhedge", "transport", "oracle")
EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


# -- serialisation ------------------------------------------------------------

def poly_json(P: HPolyhedron) -> dict:
    """Irredundant rows ``a . x <= b`` (plus ``x >= 0``), sorted."""
    P = P.canonical()
    rows = sorted((tuple(r.coeffs), r.offset) for r in P.constraints)
    return {"dim": P.dim, "nonneg": P.nonneg,
            "rows": [fmt_vec(a) for a, _ in rows], "offsets": [fmt(b) for _, b in rows]}


def body_json(body) -> dict:
    if isinstance(body, FinitePointSet):
        return {"points": [fmt_vec(p) for p in sorted(body.points)]}
    if isinstance(body, PolyUnion):
        return {"union": [poly_json(p) for p in body.pieces]}
    return poly_json(body)


def _jsonable(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "numerator"):
        return fmt(value)
    if hasattr(value, "coords"):
        return fmt_vec(value.coords)
    if hasattr(value, "weights"):
        return fmt_vec(value.weights)
    raise TypeError(f"cannot serialise {type(value).__name__}")


# -- independent re-verification -----------------------------------------------

def _sup(body, w):
    """``sup <w, X>`` over a body; None when unbounded."""
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
    return ZERO if best is None else best


def _require(ok: bool, what: str):
    if not ok:
        raise CertificateError(f"re-verification failed: {what}")


def verify_bipolar_report(S: RobustSet, rep) -> None:
    if rep.equal:
        return
    w = rep.witness
    _require(w is not None and not S.contains_point(w), "witness lies in the set")
    _require(rep.bipolar.contains_point(w), "witness lies outside the bipolar")
    cert = rep.certificate or {}
    if cert.get("kind") == "separating_measure":
        mu = cert["measure"]
        top = _sup(S.body, mu)
        _require(all(v >= 0 for v in mu), "separating measure is negative")
        _require(top is not None and top <= 1, "separating measure exceeds 1 on the set")
        _require(dot(mu, w) > 1, "separating measure does not separate the witness")


def verify_sensitivity_report(S: RobustSet, rep) -> None:
    if rep.sensitive:
        return
    w = rep.witness
    _require(not S.contains_point(w), "envelope witness lies in the set")
    _require(rep.envelope.contains_point(w), "envelope witness outside the envelope")


# -- commands -------------------------------------------------------------------

def cmd_polar(scen: Scenario, target: dict) -> tuple:
    S = scen.sets[target["set"]]
    P = duality.polar_ca(S)
    return EXIT_OK, {"set": target["set"], "polar": poly_json(P.poly)}


def cmd_bipolar(scen: Scenario, target: dict) -> tuple:
    S = scen.sets[target["set"]]
    Qs = _qset(scen, target)
    hull = duality.bipolar_ca(S)
    lifted = duality.bipolar_lifted(S, Qs)
    return EXIT_OK, {"set": target["set"], "qset": target["qset"],
                     "bipolar": body_json(hull.body), "lifted": body_json(lifted.body)}


def cmd_check_bipolar(scen: Scenario, target: dict) -> tuple:
    S = scen.sets[target["set"]]
    rep = duality.check_bipolar_theorem(S, _qset(scen, target))
    verify_bipolar_report(S, rep)
    out = {"set": target["set"], "qset": target["qset"], "equal": rep.equal,
           "properties": dict(sorted(rep.properties.items()))}
    if not rep.equal:
        out["witness"] = rep.witness
        out["reason"] = rep.witness_reason
        out["certificate"] = rep.certificate
    return (EXIT_OK if rep.equal else EXIT_VIOLATED), out


def cmd_sensitivity(scen: Scenario, target: dict) -> tuple:
    S = scen.sets[target["set"]]
    rep = sensitivity.is_sensitive(S, _qset(scen, target))
    verify_sensitivity_report(S, rep)
    out = {"set": target["set"], "qset": target["qset"], "sensitive": rep.sensitive,
           "envelope": body_json(rep.envelope.body)}
    if not rep.sensitive:
        out["witness"] = rep.witness
    return (EXIT_OK if rep.sensitive else EXIT_VIOLATED), out


def cmd_aggregate(scen: Scenario, target: dict) -> tuple:
    if "family" in target:
        fam, fill = scen.families[target["family"]]
        ok, conflict = sensitivity.is_coherent(fam)
        out = {"family": target["family"], "coherent": ok}
        if not ok:
            i, j, atom = conflict
            pos = scen.priors.nonpolar_atoms.index(scen.space.index(atom))
            vi, vj = fam.entries[i][1].coords[pos], fam.entries[j][1].coords[pos]
            _require(vi != vj, "coherence conflict has equal values")
            out["conflict"] = {"entries": [i, j], "atom": atom, "values": [vi, vj]}
            return EXIT_VIOLATED, out
        agg = sensitivity.build_aggregator(fam, fill)
        for Q, X in fam.entries:
            for p in support_positions(scen.priors, Q):
                _require(agg.coords[p] == X.coords[p], "aggregator misses a family value")
        out["aggregator"] = agg
        return EXIT_OK, out
    S = scen.sets[target["set"]]
    rep = sensitivity.is_Q_stable(S, _qset(scen, target))
    out = {"set": target["set"], "qset": target["qset"], "stable": rep.stable,
           "families_checked": rep.families_checked}
    if not rep.stable:
        _require(rep.witness is not None and not S.contains_point(rep.witness),
                 "stability witness lies in the set")
        _require(all(S.contains_point(X) for X in rep.family), "family leaves the set")
        out["aggregator"] = rep.witness
        out["family"] = rep.family
    return (EXIT_OK if rep.stable else EXIT_VIOLATED), out


def cmd_superhedge(scen: Scenario, target: dict) -> tuple:
    if scen.market is None:
        raise InputError("market: block required by superhedge")
    rep = finance.verify_dual_martingale(scen.market)
    if rep.witness is not None:
        in_m = rep.martingale.contains_point(rep.witness)
        in_p = rep.polar_probabilities.contains_point(rep.witness)
        _require(in_m != in_p, "dual-martingale witness is on both or neither side")
    out = {"match": rep.match, "superhedge": body_json(rep.superhedge.body),
           "polar_probability_vertices": rep.polar_vertices,
           "martingale_vertices": rep.martingale_vertices}
    if rep.witness is not None:
        out["witness"] = rep.witness
        out["witness_side"] = rep.witness_side
    return (EXIT_OK if rep.match else EXIT_VIOLATED), out


def cmd_transport(scen: Scenario, target: dict) -> tuple:
    tb = scen.transport
    if tb is None:
        raise InputError("transport: block required by transport")
    if not tb.goals:
        raise InputError("transport.goals: at least one goal is required")
    X = tb.goals[target["goal"]]
    rep = transport.check_no_gap(X, tb.system)
    _require(rep.primal_value == rep.dual_value, "primal and dual values differ")
    if rep.optimal_mu is not None:
        _require(tb.system.product_polyhedron().contains_point(rep.optimal_mu),
                 "optimal coupling is not admissible")
        _require(dot(X, rep.optimal_mu) == rep.primal_value, "coupling misses the value")
    out = {"goal": X, "primal": rep.primal_value, "dual": rep.dual_value,
           "coupling": rep.optimal_mu, "split": rep.optimal_pair,
           "gap_zero": rep.gap_zero, "C_equals_D": rep.C_equals_D,
           "polar_identity": rep.polar_identity, "C_sensitive": rep.C_sensitive}
    if tb.C1 is not None and tb.C2 is not None:
        ident = transport.marginal_polar_identity(tb.system, tb.C1, tb.C2, split=rep.C)
        out["marginal_identity"] = ident.holds
    ok = rep.gap_zero and rep.C_equals_D and out.get("marginal_identity", True)
    return (EXIT_OK if ok else EXIT_VIOLATED), out


def _probe_grid(k: int) -> list:
    levels = [ZERO, ONE / 2, ONE, ONE * 3 / 2, ONE * 2]
    return [tuple(p) for p in product(levels, repeat=k)]


def cmd_oracle(scen: Scenario, target: dict) -> tuple:
    S = scen.sets[target["set"]]
    orc = oracle.MembershipOracle(S, target["max_denominator"])
    hull = duality.bipolar_ca(S, cross_check=False)
    pts = target.get("points") or _probe_grid(scen.priors.k)
    rows, disagree = [], []
    for p in pts:
        a, b = orc.contains(p), hull.contains_point(p)
        rows.append({"point": p, "oracle": a, "hull": b})
        if a != b:
            disagree.append(p)
    out = {"set": target["set"], "max_denominator": target["max_denominator"],
           "probes": rows, "disagreements": disagree}
    return (EXIT_OK if not disagree else EXIT_VIOLATED), out


HANDLERS = {"polar": cmd_polar, "bipolar": cmd_bipolar, "check-bipolar": cmd_check_bipolar,
            "sensitivity": cmd_sensitivity, "aggregate": cmd_aggregate,
            "superhedge": cmd_superhedge, "transport": cmd_transport, "oracle": cmd_oracle}


def _qset(scen: Scenario, target: dict) -> tuple:
    return scen.qset(target["qset"])


# -- targets ------------------------------------------------------------------

def targets(scen: Scenario, command: str, opts: argparse.Namespace) -> list:
    """Work items for ``command``: the scenario's matching checks, or every
    applicable set, family or goal."""
    base = {"qset": opts.qset, "max_denominator": opts.max_denominator}
    listed = [c for c in scen.checks if c["command"] == command]
    if opts.set is not None:
        if opts.set not in scen.sets:
            raise InputError(f"--set: unknown set {opts.set!r}")
        listed = [c for c in listed if c.get("set") == opts.set] or \
            [{"command": command, "set": opts.set}]
    out = []
    for c in listed:
        t = dict(base)
        t.update({k: v for k, v in c.items() if k != "command"})
        if "points" in t:
            t["points"] = [scen.points[p] if isinstance(p, str) else vec(p) for p in t["points"]]
        out.append(t)
    if out:
        for t in out:
            _needs(scen, command, t)
        return out
    if command == "superhedge":
        return [dict(base)]
    if command == "transport":
        n = len(scen.transport.goals) if scen.transport else 0
        return [dict(base, goal=i) for i in range(n)] or [dict(base, goal=0)]
    if command == "aggregate" and scen.families:
        return [dict(base, family=f) for f in scen.families]
    if not scen.sets:
        raise InputError(f"sets: {command} needs at least one set")
    pts = list(scen.points.values())
    return [dict(base, set=s, points=pts) for s in scen.sets]


def _needs(scen, command, t):
    if command in ("polar", "bipolar", "check-bipolar", "sensitivity", "oracle") \
            and "set" not in t:
        raise InputError(f"checks: {command} needs a \"set\"")
    if command == "aggregate" and "set" not in t and "family" not in t:
        raise InputError("checks: aggregate needs a \"set\" or a \"family\"")
    if command == "transport":
        t.setdefault("goal", 0)


def run_target(command: str, scen: Scenario, target: dict, timing: bool) -> tuple:
    start = time.perf_counter()
    code, out = HANDLERS[command](scen, target)
    if timing:
        out["wall_time_s"] = f"{time.perf_counter() - start:.6f}"
    return code, out


def run(scen: Scenario, command: str, opts: argparse.Namespace) -> tuple:
    """``(exit code, report)``; exceptions propagate to :func:`main`."""
    work = targets(scen, command, opts)
    if opts.parallel == "on" and len(work) > 1:
        with ProcessPoolExecutor() as pool:
            futures = [pool.submit(run_target, command, scen, t, opts.timing) for t in work]
            results = [f.result() for f in futures]
    else:
        results = [run_target(command, scen, t, opts.timing) for t in work]
    code = max((c for c, _ in results), default=EXIT_OK)
    report = {"command": command, "verdict": "holds" if code == EXIT_OK else "violated",
              "checks": [out for _, out in results]}
    return code, _jsonable(report)


# -- rendering ------------------------------------------------------------------

def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _flatten(value, prefix: str, out: list):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(value[k], f"{prefix}.{k}" if prefix else k, out)
    elif isinstance(value, list) and value and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}[{i}]", out)
    else:
        text = json.dumps(value, sort_keys=True) if isinstance(value, list) else (
            "true" if value is True else "false" if value is False
            else "null" if value is None else str(value))
        out.append((prefix, text))


def render_table(report: dict) -> str:
    rows = []
    _flatten(report, "", rows)
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsbipolar",
                                description="Exact polar/bipolar computations on finite models.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", required=True, metavar="PATH")
    p.add_argument("--output", choices=("json", "table"), default="json")
    p.add_argument("--qset", default="diracs",
                   help="diracs, priors, a named qset of the scenario, or file:PATH")
    p.add_argument("--max-denominator", type=int, default=8, dest="max_denominator")
    p.add_argument("--parallel", choices=("on", "off"), default="off")
    p.add_argument("--set", default=None, help="restrict to one named set")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock times (output is then not reproducible)")
    return p


def _error(code: int, kind: str, msg: str, output: str) -> int:
    if output == "json":
        sys.stdout.write(render_json({"error": kind, "message": msg}))
    print(f"qsbipolar: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        opts = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if opts.max_denominator < 1:
        return _error(EXIT_INPUT, "input", "--max-denominator must be positive", opts.output)
    try:
        scen = load_scenario(opts.scenario)
        scen.qset(opts.qset, "--qset")
        code, report = run(scen, opts.command, opts)
    except InputError as exc:
        return _error(EXIT_INPUT, "input", str(exc), opts.output)
    except (CertificateError, AssertionError) as exc:
        return _error(EXIT_INTERNAL, "certificate", str(exc) or type(exc).__name__, opts.output)
    render = render_json if opts.output == "json" else render_table
    sys.stdout.write(render(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
