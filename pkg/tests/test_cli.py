import json

import pytest

from mec_depend.cli import main
from mec_depend.vm_optimizer import exhaustive_scan

from conftest import table2_params


def write_config(tmp_path, name="cfg.json", **overrides):
    data = {
        "lambda_b": 0.1, "lambda_d": 6.4, "channels": 16,
        "rho_dbm": -90, "sigma2_dbm": -110, "eta": 4, "theta_db": -10,
        "lambda_a": 0.15, "p_a_override": 0.25, "mu_o": 3,
        "deg_factor": 0.1, "m_mec": 5, "m_loc": 1, "mu_loc": 0.1,
        "delta_fail": 0.1, "gamma_repair": 1.0,
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestOspCommand:
    def test_table2_value(self, table2_config_path, capsys):
        assert main(["osp", "--config", table2_config_path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["osp"] == pytest.approx(0.83, abs=0.02)
        assert out["osp"] == pytest.approx(
            out["noise_factor"] * out["lt_out"] * out["lt_in"], rel=1e-14)

    def test_theta_override(self, table2_config_path, capsys):
        assert main(["osp", "--config", table2_config_path,
                     "--theta-db", "-60"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["osp"] == pytest.approx(1.0, abs=1e-3)

    def test_malformed_json_exit_2(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"lambda_b": ')
        assert main(["osp", "--config", str(path)]) == 2
        assert "byte offset" in capsys.readouterr().err

    def test_unknown_key_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path)
        data = json.loads(open(path).read())
        data["tpyo"] = 1
        (tmp_path / "cfg.json").write_text(json.dumps(data))
        assert main(["osp", "--config", path]) == 2
        assert "tpyo" in capsys.readouterr().err


class TestKpisCommand:
    def test_delta_zero_gives_ter_one(self, tmp_path, capsys):
        path = write_config(tmp_path, delta_fail=0.0)
        assert main(["kpis", "--config", path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ter"] == 1.0

    def test_forced_osp_one_with_no_blocking(self, tmp_path, capsys):
        # negligible load and no failures: blocking mass vanishes
        path = write_config(tmp_path, lambda_a=1e-9, delta_fail=0.0)
        assert main(["kpis", "--config", path, "--osp", "1.0"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["cra"] == 1.0

    def test_undefined_ter_exit_4(self, tmp_path, capsys):
        # gamma = 0 with failures: MEC admissions die out, TER undefined
        path = write_config(tmp_path, gamma_repair=0.0)
        assert main(["kpis", "--config", path]) == 4
        assert "TER undefined" in capsys.readouterr().err

    def test_verbose_includes_steady_states(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["kpis", "--config", path, "--verbose"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["steady_states"]["mec"]["tau"]) == 21
        assert len(out["steady_states"]["loc"]["states"]) == 3

    def test_tec_consistent_with_scan(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["kpis", "--config", path, "--osp", "0.83"]) == 0
        out = json.loads(capsys.readouterr().out)
        scan_value = dict(exhaustive_scan(table2_params(), 0.83, m_max=5))[5]
        assert out["tec"] == pytest.approx(scan_value, rel=1e-12)


class TestOptimizeCommand:
    def test_output_structure(self, table2_config_path, capsys):
        assert main(["optimize", "--config", table2_config_path,
                     "--osp", "0.83"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["m_star"] >= 1
        assert out["trace"][0][0] == 1
        assert out["c_star"] == max(c for _, c in out["trace"])

    def test_huge_degradation(self, tmp_path, capsys):
        path = write_config(tmp_path, deg_factor=5.0)
        assert main(["optimize", "--config", path, "--osp", "0.83"]) == 0
        assert json.loads(capsys.readouterr().out)["m_star"] == 1


class TestSweepCommand:
    def test_gamma_sweep_ter_constant_one(self, tmp_path, capsys):
        path = write_config(tmp_path, delta_fail=0.0)
        assert main(["sweep", "--config", path, "--param", "gamma_repair",
                     "--start", "0", "--stop", "5", "--step", "0.25",
                     "--kpis", "ter"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "gamma_repair,ter"
        assert len(lines) == 22
        assert all(line.split(",")[1] == "1" for line in lines[1:])

    def test_lambda_a_family_ordering(self, tmp_path, capsys):
        # TER strictly decreasing in the arrival rate at a fixed threshold
        path = write_config(tmp_path)
        assert main(["sweep", "--config", path, "--param", "lambda_a",
                     "--start", "0.01", "--stop", "0.1", "--step", "0.045",
                     "--kpis", "ter"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")[1:]
        ters = [float(line.split(",")[1]) for line in lines]
        assert ters[0] > ters[1] > ters[2]

    def test_m_mec_sweep_matches_exhaustive_scan(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["sweep", "--config", path, "--param", "m_mec",
                     "--start", "2", "--stop", "10", "--step", "2",
                     "--kpis", "tec", "--osp", "0.83"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")[1:]
        got = {int(float(l.split(",")[0])): l.split(",")[1] for l in lines}
        scan = dict(exhaustive_scan(table2_params(), 0.83, m_max=10))
        for m, text in got.items():
            # identical to the library value at the CSV's full 12-digit precision
            assert text == format(scan[m], ".12g")

    def test_deterministic_file_output(self, tmp_path):
        path = write_config(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--config", path, "--param", "theta_db",
                "--start", "-20", "--stop", "0", "--step", "5",
                "--kpis", "cra,ter,tec"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_bytes().endswith(b"\n")
        assert b"\r" not in out1.read_bytes()

    def test_bad_param_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["sweep", "--config", path, "--param", "theta_db",
                     "--start", "5", "--stop", "0", "--step", "1",
                     "--kpis", "ter"]) == 2

    def test_unknown_kpi_exit_2(self, tmp_path):
        path = write_config(tmp_path)
        assert main(["sweep", "--config", path, "--param", "theta_db",
                     "--start", "0", "--stop", "1", "--step", "1",
                     "--kpis", "latency"]) == 2


class TestOspVerifyCommand:
    def test_csv_shape_and_determinism(self, tmp_path):
        path = write_config(tmp_path)
        out1, out2 = tmp_path / "v1.csv", tmp_path / "v2.csv"
        args = ["osp-verify", "--config", path, "--trials", "400",
                "--seed", "7", "--theta-sweep=-12:-8:2",
                "--window-km", "75"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().split("\n")
        assert lines[0] == "theta_db,osp_analytical,osp_sim,stderr,abs_diff"
        assert len(lines) == 4
        for line in lines[1:]:
            th, ana, sim, se, diff = map(float, line.split(","))
            assert abs(abs(ana - sim) - diff) <= 1e-12

    def test_single_trial_worst_case_stderr(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "one.csv"
        assert main(["osp-verify", "--config", path, "--trials", "1",
                     "--seed", "3", "--theta-sweep=-10:-10:1",
                     "--window-km", "75", "--out", str(out)]) == 0
        row = out.read_text().strip().split("\n")[1].split(",")
        assert float(row[3]) == 0.5


class TestSelftestCommand:
    def test_all_checks_pass(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
