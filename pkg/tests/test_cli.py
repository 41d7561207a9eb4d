import json
import subprocess
import sys

import pytest

from qsbipolar import cli, duality
from qsbipolar.core import InputError
from qsbipolar.scenario import load_raw, parse_scenario


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_bipolar_box(capsys, fixtures_dir):
    code, rep = run_json(capsys, "check-bipolar", "--scenario", str(fixtures_dir / "box.json"))
    assert code == 0
    assert rep["checks"][0]["equal"] is True


def test_check_bipolar_two_point(capsys, fixtures_dir):
    code, rep = run_json(capsys, "check-bipolar", "--scenario",
                         str(fixtures_dir / "two_point.json"))
    assert code == 1
    check = rep["checks"][0]
    assert check["equal"] is False and check["witness"] == ["1", "1"]


def test_missing_priors(capsys, fixtures_dir):
    code, out, err = run(capsys, "check-bipolar", "--scenario",
                         str(fixtures_dir / "missing_priors.json"))
    assert code == 2 and "priors" in err


def test_front_matter_variant_matches_json(capsys, fixtures_dir):
    _, a, _ = run(capsys, "check-bipolar", "--scenario", str(fixtures_dir / "two_point.json"))
    _, b, _ = run(capsys, "check-bipolar", "--scenario",
                  str(fixtures_dir / "two_point_front_matter.json"))
    assert a == b


def test_output_is_byte_deterministic(capsys, fixtures_dir):
    path = str(fixtures_dir / "all_diracs.json")
    _, a, _ = run(capsys, "check-bipolar", "--scenario", path)
    _, b, _ = run(capsys, "check-bipolar", "--scenario", path)
    _, c, _ = run(capsys, "check-bipolar", "--scenario", path, "--parallel", "on")
    assert a == b == c


def test_timing_is_opt_in(capsys, fixtures_dir):
    path = str(fixtures_dir / "box.json")
    _, rep = run_json(capsys, "check-bipolar", "--scenario", path)
    assert "wall_time_s" not in rep["checks"][0]
    _, rep = run_json(capsys, "check-bipolar", "--scenario", path, "--timing")
    assert "wall_time_s" in rep["checks"][0]


def test_table_output(capsys, fixtures_dir):
    code, out, _ = run(capsys, "superhedge", "--scenario", str(fixtures_dir / "binomial.json"),
                       "--output", "table")
    assert code == 0
    assert 'checks[0].martingale_vertices[0]         ["1/3", "2/3"]' in out


@pytest.mark.parametrize("name, verts", [("binomial", [["1/3", "2/3"]]), ("arbitrage", [])])
def test_superhedge_fixtures(capsys, fixtures_dir, name, verts):
    code, rep = run_json(capsys, "superhedge", "--scenario", str(fixtures_dir / f"{name}.json"))
    check = rep["checks"][0]
    assert code == 0 and check["match"]
    assert check["polar_probability_vertices"] == verts == check["martingale_vertices"]


@pytest.mark.parametrize("name", ["mass_total", "mass_off_set"])
def test_transport_fixtures(capsys, fixtures_dir, name):
    code, rep = run_json(capsys, "transport", "--scenario", str(fixtures_dir / f"{name}.json"))
    assert code == 0
    for check in rep["checks"]:
        assert check["gap_zero"] and check["C_equals_D"] and check["marginal_identity"]
        assert check["primal"] == check["dual"]


def test_oracle_command(capsys, fixtures_dir):
    code, rep = run_json(capsys, "oracle", "--scenario", str(fixtures_dir / "two_point.json"))
    assert code == 0
    verdicts = {tuple(p["point"]): p["oracle"] for p in rep["checks"][0]["probes"]}
    assert verdicts == {("1", "1"): True, ("2", "1"): False, ("0", "0"): True}


def test_oracle_default_grid(capsys, fixtures_dir):
    code, rep = run_json(capsys, "oracle", "--scenario", str(fixtures_dir / "diagonal.json"),
                         "--max-denominator", "4")
    assert code == 0 and len(rep["checks"][0]["probes"]) == 25


def test_polar_and_bipolar_commands(capsys, fixtures_dir):
    path = str(fixtures_dir / "two_point.json")
    _, rep = run_json(capsys, "polar", "--scenario", path)
    assert rep["checks"][0]["polar"]["rows"] == [["0", "2"], ["2", "0"]]
    _, rep = run_json(capsys, "bipolar", "--scenario", path, "--qset", "full")
    assert rep["checks"][0]["bipolar"] == rep["checks"][0]["lifted"]
    assert rep["checks"][0]["bipolar"]["rows"] == [["1", "1"]]


def test_sensitivity_command(capsys, fixtures_dir):
    code, rep = run_json(capsys, "sensitivity", "--scenario", str(fixtures_dir / "diagonal.json"))
    assert code == 1 and rep["checks"][0]["witness"] == ["1", "0"]
    code, rep = run_json(capsys, "sensitivity", "--scenario",
                         str(fixtures_dir / "sensitive_sets.json"), "--set", "below_a",
                         "--qset", "priors")
    assert code == 0 and rep["checks"][0]["sensitive"]


def test_aggregate_command(capsys, fixtures_dir):
    code, rep = run_json(capsys, "aggregate", "--scenario", str(fixtures_dir / "stability.json"))
    assert code == 1
    box, ind, fam = rep["checks"]
    assert box["stable"] and not ind["stable"]
    assert ind["aggregator"] == ["1", "1", "1"] == fam["aggregator"]


def test_aggregate_conflict(capsys, tmp_path, fixtures_dir):
    data = json.loads((fixtures_dir / "stability.json").read_text())
    data["checks"] = [{"command": "aggregate", "family": "clash"}]
    path = write(tmp_path, "clash.json", json.dumps(data))
    code, rep = run_json(capsys, "aggregate", "--scenario", path)
    assert code == 1
    assert rep["checks"][0]["conflict"] == {"atom": "a", "entries": [0, 1], "values": ["1", "3"]}


def test_qset_from_file(capsys, tmp_path, fixtures_dir):
    qpath = write(tmp_path, "q.json", '{"qset": [["1/2", "1/2"]]}')
    code, rep = run_json(capsys, "check-bipolar", "--scenario",
                         str(fixtures_dir / "two_point.json"), "--qset", f"file:{qpath}")
    assert code == 1 and rep["checks"][0]["qset"] == "full"


@pytest.mark.parametrize("body, where", [
    ('{"space": ["a", "b"], "priors": "diracs", "sets": {"S": {"box": ["1", "x"]}}}',
     "sets.S.box[1]"),
    ('{"space": ["a", "b"], "priors": "diracs", "sets": {"S": {"box": [0.5, 1]}}}',
     "floating-point"),
    ('{"space": ["a", "b"], "priors": [["1/2", "1/3"]]}', "priors[0]"),
    ('{"space": ["a", "b"], "priors": "diracs", "sets": {"S": {"box": ["1"]}}}', "sets.S.box"),
    ('{"space": ["a", "b"], "priors": "diracs",\n "sets": }', "json line 2"),
    ('{"space": ["a", "b"], "priors": "diracs", "sets": {"S": {"box": ["1", "1"]}},'
     ' "checks": [{"command": "polar", "set": "T"}]}', "checks[0].set"),
    ('{"space": ["a", "b"], "priors": "diracs", "sets": {"S": {"box": ["1", "1/0"]}}}',
     "sets.S.box[1]"),
])
def test_input_errors_carry_locations(capsys, tmp_path, body, where):
    path = write(tmp_path, "bad.json", body)
    code, out, err = run(capsys, "polar", "--scenario", path)
    assert code == 2
    assert where in err


def test_front_matter_conflict(tmp_path):
    text = '+++\nspace = ["a"]\npriors = "diracs"\n+++\n{"space": ["b"]}\n'
    with pytest.raises(InputError, match="space"):
        load_raw(text)


def test_front_matter_rejects_floats():
    with pytest.raises(InputError, match="floating-point"):
        load_raw('+++\nx = 0.5\n+++\n')


def test_unknown_qset_flag(capsys, fixtures_dir):
    code, _, err = run(capsys, "polar", "--scenario", str(fixtures_dir / "box.json"),
                       "--qset", "nope")
    assert code == 2 and "--qset" in err


def test_bad_command_is_input_error(capsys, fixtures_dir):
    code, _, _ = run(capsys, "frobnicate", "--scenario", str(fixtures_dir / "box.json"))
    assert code == 2


def test_parse_scenario_market_requires_blocks():
    with pytest.raises(InputError, match="market"):
        parse_scenario({"space": ["u", "d"], "priors": "diracs",
                        "market": {"filtration": [[["u", "d"]]]}})


def test_fault_injection_exits_3(capsys, monkeypatch, fixtures_dir):
    """A wrong separating measure must be caught by the CLI's re-check."""
    monkeypatch.setattr(duality, "separating_measure", lambda S, X: (0,) * len(X))
    code, out, err = run(capsys, "check-bipolar", "--scenario",
                         str(fixtures_dir / "all_diracs.json"))
    assert code == 3 and "re-verification" in err


def test_module_entry_point(fixtures_dir):
    proc = subprocess.run([sys.executable, "-m", "qsbipolar", "check-bipolar", "--scenario",
                           str(fixtures_dir / "two_point.json")], capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["checks"][0]["witness"] == ["1", "1"]
