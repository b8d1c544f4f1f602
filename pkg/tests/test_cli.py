import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from fblab import scenarios
from fblab.cli import main, parse_n_list, run_protocol, load_scenario
from fblab._numeric import InputError


def close(text, exact, digits=48):
    return abs(F(text) - exact) < F(1, 10 ** digits)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestBounds:
    def test_z_equals_y(self, capsys):
        code, out, _ = run(["bounds", "--input", str(scenarios.path("z_equals_y.txt")), "--eps", "0.1"], capsys)
        assert code == 0
        rep = json.loads(out)
        # Z=Y: beta_alpha = alpha, so K = 1/(1-eps); reports carry 50 significant digits
        assert close(rep["converseK"]["value"], F(10, 9))
        assert all(rep["equivalences"].values())
        assert rep["ordering"]["achievability_le_converse"]

    def test_z_constant(self, capsys):
        code, out, _ = run(["bounds", "--input", str(scenarios.path("z_constant.txt")), "--eps", "1/10"], capsys)
        assert code == 0
        assert close(json.loads(out)["converseK"]["value"], F(40, 9))

    def test_numbers_are_decimal_strings(self, capsys):
        _, out, _ = run(["bounds", "--input", str(scenarios.path("bsc_joint.txt")), "--eps", "1e-10"], capsys)
        rep = json.loads(out)
        assert isinstance(rep["converseK"]["value"], str)
        assert isinstance(rep["lambda_bar"], str)

    def test_hiprec_backend_agrees(self, capsys):
        path = str(scenarios.path("bsc_joint.txt"))
        _, a, _ = run(["bounds", "--input", path, "--eps", "0.1"], capsys)
        _, b, _ = run(["bounds", "--input", path, "--eps", "0.1", "--backend", "hiprec"], capsys)
        ka = F(json.loads(a)["converseK"]["value"])
        kb = F(json.loads(b)["converseK"]["value"])
        assert abs(ka - kb) < F(1, 10 ** 40)

    def test_malformed_file(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("joint 2 2\n0.5 0.25\n0.2 x5\n")
        code, _, err = run(["bounds", "--input", str(p), "--eps", "0.1"], capsys)
        assert code == 2
        assert "line 3" in err and "x5" in err

    def test_missing_arguments(self, capsys):
        assert run(["bounds"], capsys)[0] == 2
        assert run(["bounds", "--input", str(scenarios.path("z_constant.txt"))], capsys)[0] == 2
        assert run(["bounds", "--input", str(scenarios.path("z_constant.txt")), "--eps", "1"], capsys)[0] == 2
        assert run([], capsys)[0] == 2


class TestSweep:
    def test_n_list_parsing(self):
        assert parse_n_list("100:500:100") == [100, 200, 300, 400, 500]
        assert parse_n_list("1,5, 3") == [1, 5, 3]
        assert parse_n_list("2:4") == [2, 3, 4]
        for bad in ("", "a", "1:5:0", "0", "-3"):
            with pytest.raises(InputError):
                parse_n_list(bad)

    def test_csv_and_summary(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(["sweep", "--p", "0.11", "--eps", "1e-10", "--n-list", "10,20", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_bytes().decode().split("\n")
        assert lines[0] == "n,converse_rate,achievability_rate,normal_approx_rate"
        assert [l.split(",")[0] for l in lines[1:3]] == ["10", "20"]
        assert lines[3].startswith("# summary: rows=2;")
        assert lines[4] == ""
        assert b"\r" not in out.read_bytes()

    def test_byte_identical_reruns(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            run(["sweep", "--p", "11/100", "--eps", "1e-10", "--n-list", "1,50:150:50", "--out", str(p)], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_single_n(self, capsys):
        code, out, _ = run(["sweep", "--p", "0.11", "--eps", "1e-10", "--n", "1"], capsys)
        assert code == 0
        row = out.splitlines()[1].split(",")
        assert row[0] == "1" and row[2] == "0"

    def test_bad_parameters(self, capsys):
        assert run(["sweep", "--p", "0.6", "--eps", "0.1", "--n", "3"], capsys)[0] == 2
        assert run(["sweep", "--p", "0.11", "--eps", "0.1"], capsys)[0] == 2
        assert run(["sweep", "--p", "0.11"], capsys)[0] == 2


class TestProtocol:
    @pytest.mark.parametrize("name", ["bsc_n6", "bsc_n8", "erasure_n8"])
    def test_bundled_scenarios_pass(self, name, capsys):
        code, out, _ = run(["protocol", "--input", name], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["checks"] and all(rep["checks"].values())
        assert F(rep["simulation_distance"]) <= F(rep["pa_delta"])

    def test_bsc_n6_values(self):
        rep = run_protocol(load_scenario("bsc_n6"))
        assert rep["chosen"]["member"] == 46
        assert abs(float(rep["pa_delta"]) - 0.27761292) < 1e-8
        assert "family_mean_within_bound" in rep["checks"]

    def test_erasure_report(self):
        rep = run_protocol(load_scenario("erasure_n8"))
        assert rep["quantization"]["zero_distortion_iff_solvable"]
        assert abs(float(rep["rate_distortion_reference"]) - 0.13904) < 1e-5

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert run(["protocol", "--input", "bsc_n6", "--out", str(p)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_overrides(self, capsys):
        code, out, _ = run(["protocol", "--input", "bsc_n6", "--n", "5", "--k", "1", "--derand", "bestv"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["n"] == 5 and rep["lossy"]["best_vt"] is None and rep["lossy"]["best_v"] is not None

    def test_guard_exit_code(self, capsys):
        code, _, err = run(["protocol", "--input", "bsc_n6", "--n", "30", "--k", "2"], capsys)
        assert code == 3 and "guard" in err

    def test_unknown_scenario(self, capsys):
        code, _, err = run(["protocol", "--input", "no_such_scenario"], capsys)
        assert code == 2

    def test_bad_json(self, tmp_path, capsys):
        p = tmp_path / "s.json"
        p.write_text("{\n  'n': 6\n}")
        assert run(["protocol", "--input", str(p)], capsys)[0] == 2

    def test_scenario_listing(self):
        assert {"bsc_n6.json", "bsc_n8.json", "hamming_n12.json", "erasure_n8.json"} <= set(scenarios.available())


class TestSelftest:
    def test_flag_and_command(self, capsys):
        code, out, _ = run(["--selftest"], capsys)
        assert code == 0
        rep = json.loads(out)["results"]
        assert all(v["failed"] == 0 for k, v in rep.items() if k != "rd_references")
        assert all(rep["rd_references"].values())


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fblab", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("fblab ")
