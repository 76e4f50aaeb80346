"""Command line interface: subcommands, outputs, exit codes."""

import csv
import json
import os

import numpy as np
import pytest

from arofac import read_t3
from arofac.cli import main


def run(args, capsys):
    code = main(args)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture()
def synth_t3(tmp_path, capsys):
    code, out, _ = run(["synth", "--dims", "8", "9", "10", "--rank", "2",
                        "--seed", "1", "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    t3_path, truth_path = out.strip().split("\n")
    return t3_path, truth_path


class TestSynth:
    def test_outputs_named_and_readable(self, synth_t3):
        t3_path, truth_path = synth_t3
        assert os.path.basename(t3_path) == "synth_8x9x10_r2_eps0.0_seed1.t3"
        assert truth_path.endswith(".truth.json")
        A = read_t3(t3_path)
        assert A.shape == (8, 9, 10)
        doc = json.loads(open(truth_path).read())
        assert doc["rank"] == 2

    def test_byte_identical_across_runs(self, tmp_path, capsys):
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            code, out, _ = run(["synth", "--dims", "5", "6", "7", "--rank",
                                "2", "--noise", "0.1", "--seed", "3",
                                "--output-dir", str(d)], capsys)
            assert code == 0
            outs.append(out.strip().split("\n"))
        for p1, p2 in zip(*outs):
            assert open(p1, "rb").read() == open(p2, "rb").read()


class TestDecompose:
    def test_round_trip_rank2(self, synth_t3, tmp_path, capsys):
        t3_path, _ = synth_t3
        out_dir = tmp_path / "dec"
        code, out, _ = run(["decompose", "--input", t3_path,
                            "--output-dir", str(out_dir), "--seed", "0",
                            "--restarts", "60"], capsys)
        assert code == 0
        assert "rank 2" in out
        report = json.loads((out_dir / "report.json").read_text())
        assert report["rank"] == 2
        assert report["rel_error"] < 1e-8
        assert report["config"]["restarts_per_mode"] == 60
        assert report["wall_time_s"] > 0
        assert report["command"][0] == "arofac"
        for mode, n in (("mode1", 8), ("mode2", 9), ("mode3", 10)):
            with open(out_dir / f"{mode}_factors.csv", newline="") as f:
                rows = list(csv.reader(f))
            assert rows[0] == ["factor_index", "coord_index", "value"]
            assert len(rows) == 1 + 2 * n

    def test_report_matches_schema(self, synth_t3, tmp_path, capsys):
        jsonschema = pytest.importorskip("jsonschema")
        t3_path, _ = synth_t3
        out_dir = tmp_path / "dec"
        code, _, _ = run(["decompose", "--input", t3_path,
                          "--output-dir", str(out_dir),
                          "--restarts", "60"], capsys)
        assert code == 0
        import arofac
        schema_path = os.path.join(os.path.dirname(arofac.__file__),
                                   "schemas", "report.schema.json")
        schema = json.loads(open(schema_path).read())
        report = json.loads((out_dir / "report.json").read_text())
        jsonschema.validate(report, schema)

    def test_rank_hint_and_no_mode3_echoed(self, synth_t3, tmp_path, capsys):
        t3_path, _ = synth_t3
        out_dir = tmp_path / "dec"
        code, _, _ = run(["decompose", "--input", t3_path,
                          "--output-dir", str(out_dir), "--restarts", "60",
                          "--rank-hint", "2", "--no-mode3",
                          "--span-weighting", "uniform"], capsys)
        assert code == 0
        cfg = json.loads((out_dir / "report.json").read_text())["config"]
        assert cfg["span_target_dim"] == 2
        assert cfg["compute_mode3"] is False
        assert cfg["span_weighting"] == "uniform"

    def test_eem_csv_input(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        u, v = rng.standard_normal(6), rng.standard_normal(7)
        lam = rng.standard_normal(4) + 3.0
        for k in range(4):
            np.savetxt(tmp_path / f"em{k + 1}.csv",
                       lam[k] * np.outer(u, v), delimiter=",")
        out_dir = tmp_path / "dec"
        code, out, _ = run(["decompose", "--input",
                            str(tmp_path / "em*.csv"),
                            "--output-dir", str(out_dir),
                            "--restarts", "40"], capsys)
        assert code == 0
        assert "rank 1" in out

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code, _, err = run(["decompose", "--input",
                            str(tmp_path / "absent.t3"),
                            "--output-dir", str(tmp_path)], capsys)
        assert code == 2
        assert "error" in err.lower()

    def test_numerical_failure_exits_3(self, synth_t3, tmp_path, capsys,
                                       monkeypatch):
        import arofac.cli as cli
        from arofac import NumericalError

        def boom(*a, **k):
            raise NumericalError("candidate collection failed",
                                 stage="collect(1, 2)")

        monkeypatch.setattr(cli, "arofac2", boom)
        t3_path, _ = synth_t3
        code, _, err = run(["decompose", "--input", t3_path,
                            "--output-dir", str(tmp_path / "o")], capsys)
        assert code == 3
        assert "error" in err.lower()


class TestSweep:
    def test_tiny_sweep(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--dims", "8", "9", "10", "--rank", "2",
                            "--eps-grid", "0.0,0.05", "--n-seeds", "2",
                            "--restarts", "60",
                            "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        csv_path = out.strip()
        with open(csv_path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["eps", "seed", "detected_rank",
                           "min_matched_corr", "rel_error"]
        assert len(rows) == 5
        noiseless = [r for r in rows[1:] if float(r[0]) == 0.0]
        assert all(r[2] == "2" for r in noiseless)

    def test_bad_eps_grid_exits_2(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--dims", "8", "9", "10", "--rank", "2",
                            "--eps-grid", "0.1,zap",
                            "--output-dir", str(tmp_path)], capsys)
        assert code == 2
        assert "eps-grid" in err


class TestCompare:
    def test_with_sidecar(self, synth_t3, tmp_path, capsys):
        t3_path, _ = synth_t3
        out_dir = tmp_path / "cmp"
        code, out, err = run(["compare", "--input", t3_path, "--rank", "2",
                              "--restarts", "60",
                              "--output-dir", str(out_dir)], capsys)
        assert code == 0
        assert "warning" not in err
        doc = json.loads((out_dir / "compare.json").read_text())
        for arm in ("arofac2", "parafac"):
            assert doc[arm]["rank"] == 2
            assert doc[arm]["min_matched_corr"] > 0.999
            assert (out_dir / f"corr_{arm}.csv").exists()
        with open(out_dir / "corr_arofac2.csv", newline="") as f:
            C = [[float(x) for x in row] for row in csv.reader(f)]
        assert len(C) == 2 and len(C[0]) == 2

    def test_without_sidecar_warns(self, synth_t3, tmp_path, capsys):
        t3_path, truth_path = synth_t3
        bare = tmp_path / "bare.t3"
        bare.write_bytes(open(t3_path, "rb").read())
        out_dir = tmp_path / "cmp2"
        code, _, err = run(["compare", "--input", str(bare), "--rank", "2",
                            "--restarts", "60",
                            "--output-dir", str(out_dir)], capsys)
        assert code == 0
        assert "no ground-truth sidecar" in err
        doc = json.loads((out_dir / "compare.json").read_text())
        assert "min_matched_corr" not in doc["arofac2"]
        assert not (out_dir / "corr_arofac2.csv").exists()


class TestParser:
    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_console_script_installed(self):
        import shutil
        assert shutil.which("arofac") is not None
