import csv
import json

import pytest

from quadet.cli import SER_COLUMNS, main, parse_detectors, parse_grid, resolve_threads
from quadet.cli import UsageError


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestGridParsing:
    def test_colon_grid(self):
        assert parse_grid("-10:2:30") == tuple(float(v) for v in range(-10, 31, 2))

    def test_colon_grid_inexact_stop(self):
        assert parse_grid("0:0.5:1.2") == (0.0, 0.5, 1.0)

    def test_comma_list(self):
        assert parse_grid("0,10,20") == (0.0, 10.0, 20.0)

    def test_single_value(self):
        assert parse_grid("30") == (30.0,)

    @pytest.mark.parametrize("text", ["1:2", "a:b:c", "1:0:5", "10:1:0", "x,y"])
    def test_malformed(self, text):
        with pytest.raises(UsageError):
            parse_grid(text)

    def test_detectors(self):
        assert parse_detectors("ed, BQUE ,ml") == ("ed", "bque", "ml")
        with pytest.raises(UsageError):
            parse_detectors("ed,zf")


class TestThreadResolution:
    def test_explicit(self):
        assert resolve_threads("3") == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("QUADET_THREADS", "2")
        assert resolve_threads(None) == 2

    def test_auto(self, monkeypatch):
        monkeypatch.delenv("QUADET_THREADS", raising=False)
        assert resolve_threads(None) >= 1

    def test_invalid(self):
        with pytest.raises(UsageError):
            resolve_threads("zero")


class TestSerCommand:
    def test_csv_schema_and_content(self, tmp_path):
        out = tmp_path / "ser.csv"
        rc = main([
            "ser", "--n", "16", "--rho", "0.5", "--mod", "4", "--snr-db", "0:10:10",
            "--detectors", "ed,bque,ml", "--trials", "4000", "--seed", "42",
            "--threads", "1", "--out", str(out),
        ])
        assert rc == 0
        rows = read_csv(out)
        assert rows[0] == list(SER_COLUMNS)
        assert len(rows) == 1 + 3 * 2  # header + detectors x snr points
        header = rows[0]
        ml_rows = [r for r in rows[1:] if r[header.index("detector")] == "ml"]
        assert all(r[header.index("analytic_ser")] == "" for r in ml_rows)
        ed_rows = [r for r in rows[1:] if r[header.index("detector")] == "ed"]
        assert all(float(r[header.index("analytic_ser")]) >= 0 for r in ed_rows)

    def test_json_meta(self, tmp_path):
        out = tmp_path / "ser.json"
        rc = main([
            "ser", "--n", "8", "--rho", "0.0", "--mod", "2", "--snr-db", "5",
            "--detectors", "ed", "--trials", "1000", "--seed", "7", "--out", str(out),
        ])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["meta"]["seed"] == 7
        assert doc["meta"]["version"]
        assert doc["meta"]["wall_time_s"] >= 0
        assert len(doc["rows"]) == 1
        assert set(doc["rows"][0]) == set(SER_COLUMNS)

    def test_full_rank_requirement_exit_2(self, tmp_path, capsys):
        rc = main([
            "ser", "--n", "8", "--rho", "1.0", "--mod", "2", "--snr-db", "5",
            "--detectors", "ed", "--trials", "100", "--seed", "1",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2
        assert "rank" in capsys.readouterr().err

    def test_missing_seed_exit_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ser", "--n", "8", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_unknown_flag_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["ser", "--frobnicate", "1", "--seed", "1", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_byte_identical_reruns(self, tmp_path):
        args = [
            "ser", "--n", "16", "--rho", "0.6", "--mod", "4", "--snr-db", "0,8",
            "--detectors", "ed,abque", "--trials", "3000", "--seed", "11", "--threads", "2",
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestFloorCommand:
    def test_antenna_sweep(self, tmp_path):
        out = tmp_path / "floor.csv"
        rc = main([
            "floor", "--n-grid", "16,32", "--rho", "0.7", "--mod", "4", "--snr-db", "30",
            "--detectors", "ed", "--trials", "2000", "--seed", "3", "--out", str(out),
        ])
        assert rc == 0
        rows = read_csv(out)
        ns = [r[rows[0].index("n")] for r in rows[1:]]
        assert ns == ["16", "32"]

    def test_requires_exactly_one_grid(self, tmp_path, capsys):
        rc = main([
            "floor", "--mod", "4", "--snr-db", "30", "--detectors", "ed",
            "--trials", "100", "--seed", "3", "--out", str(tmp_path / "f.csv"),
        ])
        assert rc == 2

    def test_rho_sweep(self, tmp_path):
        out = tmp_path / "floor_rho.csv"
        rc = main([
            "floor", "--n", "16", "--rho-grid", "0.0,0.5,0.9", "--mod", "4", "--snr-db", "30",
            "--detectors", "bque", "--trials", "2000", "--seed", "3", "--out", str(out),
        ])
        assert rc == 0
        rows = read_csv(out)
        assert [r[rows[0].index("rho")] for r in rows[1:]] == ["0.0", "0.5", "0.9"]


class TestOutageCommand:
    def test_csv_pair_written(self, tmp_path):
        out = tmp_path / "outage.csv"
        rc = main([
            "outage", "--n", "12", "--rho", "0.6", "--mod", "2", "--snr-db", "5",
            "--zeta-grid", "0.01,0.1", "--n-channels", "20", "--inner-trials", "500",
            "--detectors", "ed", "--seed", "13", "--out", str(out),
        ])
        assert rc == 0
        curves = read_csv(out)
        assert curves[0][:2] == ["detector", "zeta"]
        assert len(curves) == 3
        scatter = read_csv(tmp_path / "outage_scatter.csv")
        assert scatter[0][-2:] == ["h_norm_sq", "cond_ser"]
        assert len(scatter) == 21

    def test_json_single_document(self, tmp_path):
        out = tmp_path / "outage.json"
        rc = main([
            "outage", "--n", "12", "--rho", "0.6", "--mod", "2", "--snr-db", "5",
            "--zeta-grid", "0.001,0.1", "--n-channels", "10", "--inner-trials", "400",
            "--detectors", "ed", "--seed", "13", "--out", str(out),
        ])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert {"meta", "rows", "scatter", "warnings"} <= set(doc)
        assert any("resolution" in w for w in doc["warnings"])


class TestValidateCommand:
    def test_smoke(self, tmp_path):
        out = tmp_path / "report.json"
        rc = main([
            "validate", "--seed", "1", "--n", "16", "--rho", "0.5", "--snr-db", "8",
            "--mod", "4", "--trials", "30000", "--clt-n-grid", "16,32", "--out", str(out),
        ])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["report"]["bque_efficiency"]["ok"]


class TestThresholdsCommand:
    def test_prints_tables(self, capsys):
        rc = main([
            "thresholds", "--n", "16", "--rho", "0.5", "--mod", "4", "--snr-db", "10",
            "--detectors", "ed,bque",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "ed:" in out
        assert "bque[eps_1=0]" in out


class TestConfigFile:
    def test_config_provides_defaults_cli_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "n = 16\nrho = 0.5\nmod = 2\nsnr-db = 5\ndetectors = ed\n"
            "trials = 1000\nseed = 21\nthreads = 1\n# comment line\n"
        )
        out = tmp_path / "cfg.csv"
        rc = main(["ser", "--config", str(cfg), "--trials", "500", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert rows[1][rows[0].index("trials")] == "500"  # CLI wins
        assert rows[1][rows[0].index("n")] == "16"

    def test_missing_config_exit_2(self, tmp_path):
        rc = main(["ser", "--config", str(tmp_path / "nope.cfg"), "--seed", "1",
                   "--out", str(tmp_path / "o.csv")])
        assert rc == 2
