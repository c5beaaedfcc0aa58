import io
import itertools
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from zeroerr import cli
from zeroerr.config import SolverError
from zeroerr.exponents import parity_source
from zeroerr.scheme import build_scheme, decode, encode

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"
GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_problem(tmp_path, obj, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


K2 = {"graph": {"vertices": 2, "edges": [[0, 1]]}, "q": [0.5, 0.5]}
PARITY = {"x_alphabet": 4, "y_alphabet": 2,
          "pxy": [[0.25, 0], [0, 0.25], [0.25, 0], [0, 0.25]]}


@pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.json")), ids=lambda p: p.stem)
def test_sample_problems_run(path, capsys):
    command = {"kappa": "kappa", "exponents": "exponents", "simulate": "simulate",
               "wr": "wr-bound", "zec": "zec"}[path.stem.split("_")[0]]
    code, out, err = run(capsys, command, path)
    assert code == 0, err
    json.loads(out)


class TestKappaCommand:
    def test_k2(self, capsys):
        code, out, _ = run(capsys, "kappa", PROBLEMS / "kappa_k2.json")
        res = json.loads(out)
        assert code == 0 and res["value_bits"] == 1.0 and res["restarts_used"] == 1

    def test_source_input_and_stdin(self, capsys, monkeypatch):
        problem = {"source": PARITY, "q": [0.25] * 4}
        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(problem)))
        code, out, _ = run(capsys, "kappa", "-")
        assert code == 0 and json.loads(out)["value_bits"] == 1.0

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "kappa", PROBLEMS / "kappa_k2.json", "--format", "csv")
        lines = out.strip().split("\n")
        assert code == 0 and lines[0] == "key,value" and "value_bits,1" in lines

    def test_q_length_mismatch(self, tmp_path, capsys):
        path = write_problem(tmp_path, {**K2, "q": [0.2, 0.3, 0.5]})
        code, _, err = run(capsys, "kappa", path)
        assert code == 2 and "3 entries" in err


class TestValidation:
    def test_unknown_key(self, tmp_path, capsys):
        code, _, err = run(capsys, "kappa", write_problem(tmp_path, {**K2, "extra": 1}))
        assert code == 2 and "invalid problem file" in err

    def test_bad_mass(self, tmp_path, capsys):
        path = write_problem(tmp_path, {**K2, "q": [0.5, 0.6]})
        code, _, err = run(capsys, "kappa", path)
        assert code == 2 and "sums to 1.1" in err

    def test_graph_and_source_both_given(self, tmp_path, capsys):
        path = write_problem(tmp_path, {**K2, "source": PARITY})
        assert run(capsys, "kappa", path)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "kappa", tmp_path / "nope.json")
        assert code == 2 and "cannot read" in err

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert run(capsys, "kappa", path)[0] == 2

    def test_unsorted_rates(self, tmp_path, capsys):
        path = write_problem(tmp_path, {"source": PARITY, "rates": [0.5, 0.2]})
        code, _, err = run(capsys, "exponents", path)
        assert code == 2 and "increasing" in err

    def test_cap_exceeded(self, tmp_path, capsys):
        problem = {"source": PARITY, "n": 6, "rate": 0.5, "trials": 10,
                   "caps": {"sequences": 1000}}
        code, _, err = run(capsys, "simulate", write_problem(tmp_path, problem))
        assert code == 4 and "cap" in err

    def test_cap_flag(self, capsys):
        code, out, _ = run(capsys, "zec", PROBLEMS / "zec_pentagon.json", "--cap-vertices", "2")
        res = json.loads(out)
        # the alpha check is skipped rather than failing the command
        assert code == 0 and res["alpha_check"] is None and "cap" in res["warning"]

    def test_solver_failure(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise SolverError("did not converge")

        monkeypatch.setattr(cli, "kappa", boom)
        code, _, err = run(capsys, "kappa", PROBLEMS / "kappa_k2.json")
        assert code == 3 and "solver failed" in err


class TestOutputs:
    def test_simulate_matches_golden(self, capsys):
        code, out, _ = run(capsys, "simulate", PROBLEMS / "simulate_parity.json")
        assert code == 0
        assert json.loads(out) == json.loads((GOLDEN / "simulate_parity.json").read_text())

    def test_simulate_golden_agrees_with_exact_error_probability(self):
        # exact P_e by enumerating all 256 source sequences (Y is a function of X)
        cb = build_scheme(parity_source(), 4, 0.6, seed=7)
        wrong = sum(tuple(decode(cb, encode(cb, x), [v % 2 for v in x])) != x
                    for x in itertools.product(range(4), repeat=4))
        golden = json.loads((GOLDEN / "simulate_parity.json").read_text())
        lo, hi = golden["error_rate_ci95"]
        assert lo <= wrong / 256 <= hi

    def test_reruns_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert run(capsys, "simulate", PROBLEMS / "simulate_parity.json", "--out", out)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_overrides(self, capsys):
        _, a, _ = run(capsys, "simulate", PROBLEMS / "simulate_parity.json")
        _, b, _ = run(capsys, "simulate", PROBLEMS / "simulate_parity.json", "--seed", "8")
        assert json.loads(a)["config"]["seed"] == 7 and json.loads(b)["config"]["seed"] == 8

    def test_exponents_csv_matches_golden(self, capsys):
        code, out, _ = run(capsys, "exponents", PROBLEMS / "exponents_path.json",
                           "--format", "csv")
        assert code == 0 and out == (GOLDEN / "exponents_path.csv").read_text()
        rows = [line.split(",") for line in out.strip().split("\n")[1:]]
        assert len(rows) == 8 and all(len(r) == 6 for r in rows)
        assert rows[-1][1] == "inf" and rows[-1][2] != "inf"

    def test_exponents_json_infinity(self, capsys):
        code, out, _ = run(capsys, "exponents", PROBLEMS / "exponents_path.json")
        rows = json.loads(out)["rows"]
        assert rows[-1]["e_new"]["value"] == "inf"
        assert rows[-1]["e_new"]["argmin_q"] is None

    def test_wr_bound(self, capsys):
        code, out, _ = run(capsys, "wr-bound", PROBLEMS / "wr_k4.json")
        res = json.loads(out)
        assert code == 0
        assert res["kappa_max"] == pytest.approx(2.0, abs=1e-9) and res["log2_gamma"] == 2.0
        assert [row["value"] for row in res["finite_n_table"]] == [0.0, 0.5]

    def test_zec_identity_residual(self, capsys):
        code, out, _ = run(capsys, "zec", PROBLEMS / "zec_pentagon.json")
        res = json.loads(out)
        assert code == 0 and res["alpha_check"] == 2 and res["identity_residual"] <= 2e-2

    def test_floats_have_twelve_significant_digits(self, capsys):
        _, out, _ = run(capsys, "kappa", PROBLEMS / "kappa_tightness4.json")
        val = json.loads(out)["value_bits"]
        assert len(repr(val).replace(".", "").lstrip("0")) <= 12

    def test_console_script_module(self):
        proc = subprocess.run([sys.executable, "-m", "zeroerr.cli", "kappa",
                               str(PROBLEMS / "kappa_k2.json")],
                              capture_output=True, text=True, cwd=ROOT)
        assert proc.returncode == 0 and json.loads(proc.stdout)["value_bits"] == 1.0
