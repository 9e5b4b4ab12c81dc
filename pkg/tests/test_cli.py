import json
import subprocess
import sys
from pathlib import Path

import pytest

from cdrum.cli import main

DATA = Path(__file__).resolve().parents[1] / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


class TestExitCodes:
    def test_validate_ok(self, capsys):
        code, out, _ = run_json(capsys, "validate", "--input", DATA / "example2.json")
        assert code == 0 and out["valid"] and out["observed_sequences"] == 9

    def test_check_fails_example1(self, capsys):
        code, out, _ = run_json(capsys, "check", "--input", DATA / "example1.json")
        assert code == 1 and out["holds"] is False
        assert out["reports"]["complete_monotonicity"]["holds"] is False

    def test_si_fails_example4(self, capsys):
        assert run(capsys, "check", "--input", DATA / "example4.json")[0] == 0
        code, out, _ = run_json(capsys, "check", "--input", DATA / "example4.json", "--model", "si-cdrum")
        assert code == 1 and out["model"] == "si-cdrum"

    def test_recover_not_cdrum(self, capsys):
        code, out, err = run_json(capsys, "recover", "--input", DATA / "example1.json")
        assert code == 1 and out["error"] == "NotCdrum" and "recover" in err

    def test_missing_file(self, capsys):
        code, out, err = run_json(capsys, "validate", "--input", "/no/such/file.json")
        assert code == 2 and out["error"] == "ParseError" and err

    def test_bad_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run(capsys, "validate", "--input", bad)[0] == 2

    def test_unknown_command(self, capsys):
        assert run(capsys, "bogus")[0] == 2

    def test_invalid_size(self, capsys):
        code, out, _ = run_json(capsys, "sizes", "--n", 1)
        assert code == 2 and out["error"] == "ValueError"

    def test_positivity_is_property_failure(self, capsys):
        code, out, _ = run_json(capsys, "fit", "--input", DATA / "example2.json", "--outside", "x")
        assert code == 1 and out["error"] == "PositivityViolated"


class TestOutput:
    def test_sizes_bytes(self, capsys):
        code, out, _ = run(capsys, "sizes", "--n", 6)
        assert code == 0 and out == '{"E_rows":3110400,"F_rows":48768}\n'

    def test_pretty(self, capsys):
        _, out, _ = run(capsys, "sizes", "--n", 2, "--pretty")
        assert json.loads(out) == {"E_rows": 8, "F_rows": 24} and "\n  " in out

    def test_mobius_depth(self, capsys):
        code, out, _ = run_json(capsys, "mobius", "--input", DATA / "example2.json", "--depth", 1)
        cells = {(tuple(c["choices"]), tuple(map(tuple, c["menus"]))): c["q"] for c in out["cells"]}
        assert code == 0 and cells[(("x",), (("x", "y"),))] == "1/2"

    def test_recover_round_trip(self, capsys, tmp_path):
        from cdrum import CdrumRepresentation, evaluate_representation, load_dataset

        code, out, _ = run_json(capsys, "recover", "--input", DATA / "example4.json")
        rep = CdrumRepresentation.from_dict(out["representation"])
        assert code == 0 and evaluate_representation(rep) == load_dataset(DATA / "example4.json")

    def test_lp_test_forms(self, capsys):
        code, out, _ = run_json(capsys, "test", "--input", DATA / "example2.json", "--form", "vertex")
        assert code == 0 and out["feasible"] and "seconds" not in json.dumps(out)
        code, out, _ = run_json(capsys, "test", "--input", DATA / "example1.json", "--numeric", "float")
        assert code == 1 and not out["feasible"]

    def test_timing_opt_in(self, capsys):
        _, a, _ = run(capsys, "test", "--input", DATA / "example2.json")
        _, b, _ = run(capsys, "test", "--input", DATA / "example2.json")
        assert a == b
        _, c, _ = run(capsys, "test", "--input", DATA / "example2.json", "--timing")
        assert c != a

    def test_limited_domain(self, capsys, tmp_path):
        dom = tmp_path / "dom.json"
        dom.write_text(json.dumps([[["x", "y"], ["x", "y"]], [["x"], ["x", "y"]]]))
        code, out, _ = run_json(capsys, "test", "--input", DATA / "example2.json", "--limited", dom)
        assert code == 0 and out["feasible"]

    def test_classify(self, capsys):
        code, out, _ = run_json(capsys, "classify", "--input", DATA / "example2.json")
        assert code == 0 and out["classification"]["consumption_dependent"] is False

    def test_fit_and_predict(self, capsys, tmp_path):
        params = {"model": "habit", "outside": "o", "v": {"o": 0.0, "x": 0.5}, "c": {"x": [1.0]}}
        pfile = tmp_path / "p.json"
        pfile.write_text(json.dumps(params))
        data = tmp_path / "d.json"
        code, _, _ = run(capsys, "simulate", "--params", pfile, "--output", data)
        assert code == 0
        code, fit, _ = run_json(capsys, "fit", "--input", data, "--outside", "o")
        assert code == 0 and fit["params"]["v"]["x"] == pytest.approx(0.5, abs=1e-12)
        code, pred, _ = run_json(capsys, "predict-longrun", "--params", pfile)
        assert code == 0 and sum(pred["stationary"].values()) == pytest.approx(1.0)

    def test_simulate_reproducible(self, capsys):
        args = ("simulate", "--alternatives", "a,b,c", "--components", 2, "--seed", 4)
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b and json.loads(a)["alternatives"] == ["a", "b", "c"]

    def test_oracle(self, capsys):
        code, out, _ = run_json(capsys, "oracle", "--trials", 4, "--seed", 2)
        assert code == 0 and out["all_agree"] and out["n_trials"] == 4


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "cdrum.cli", "sizes", "--n", "3"],
                         capture_output=True, text=True, check=True)
    assert out.stdout == '{"E_rows":108,"F_rows":216}\n'
