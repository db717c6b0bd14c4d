import json
import subprocess
import sys

import numpy as np
import pytest

from rdwate.cli import main
from rdwate.data import DataError
from rdwate.io import SCHEMA_VERSION, dumps, emit_result, load_csv
from rdwate.simulation import generate_setting2


def write_csv(path, header, rows):
    path.write_text(",".join(header) + "\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")
    return path


@pytest.fixture
def s2_csv(tmp_path):
    ds = generate_setting2(600, 1.0, 5)
    rows = zip(ds.y.tolist(), ds.x.tolist(), ds.z[:, 0].tolist())
    return write_csv(tmp_path / "s2.csv", ["y", "x", "z1"], [map(repr, r) for r in rows])


class TestLoadCsv:
    def test_clean(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [(rng.normal(), rng.normal(), rng.normal()) for _ in range(100)]
        ds = load_csv(write_csv(tmp_path / "a.csv", ["y", "x", "z1"], rows), cutoff=0.0)
        assert ds.n == 100 and ds.p == 1
        assert np.array_equal(ds.t, (ds.x > 0).astype(float))

    def test_sharp_contradiction(self, tmp_path):
        rows = [(0.0, x, 1.0 if x == -0.5 else float(x > 0)) for x in np.linspace(-1, 1, 20)] \
            + [(0.0, -0.5, 1.0)]
        with pytest.raises(DataError, match="row 20"):
            load_csv(write_csv(tmp_path / "b.csv", ["y", "x", "t"], rows))

    def test_nan_cell(self, tmp_path):
        rows = [(i, i / 10) for i in range(12)]
        rows[4] = ("NaN", 0.4)
        with pytest.raises(DataError, match=r"line 6, column 'y'"):
            load_csv(write_csv(tmp_path / "c.csv", ["y", "x"], rows))

    def test_text_cell(self, tmp_path):
        rows = [(i, i / 10) for i in range(12)]
        rows[0] = (0, "abc")
        with pytest.raises(DataError, match=r"line 2, column 'x'.*'abc'"):
            load_csv(write_csv(tmp_path / "d.csv", ["y", "x"], rows))

    def test_missing_column(self, tmp_path):
        with pytest.raises(DataError, match="'x'"):
            load_csv(write_csv(tmp_path / "e.csv", ["y", "z1"], [(1, 2)] * 12))

    def test_covariate_order(self, tmp_path):
        rows = [(i, i - 5.5, 10.0, 2.0) for i in range(12)]
        ds = load_csv(write_csv(tmp_path / "f.csv", ["y", "x", "z10", "z2"], rows))
        assert ds.covariate_names == ("z2", "z10")
        assert np.all(ds.z[:, 0] == 2.0)

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(DataError, match="at least"):
            load_csv(write_csv(tmp_path / "g.csv", ["y", "x"], [(1, 0.1)] * 3))


class TestJson:
    def test_round_trip(self):
        doc = {"schema_version": SCHEMA_VERSION, "a": 0.1, "b": [1.0 / 3.0, -2.5e-300], "c": {"d": 7}}
        back = json.loads(dumps(doc))
        assert back["a"] == 0.1 and back["b"][0] == 1.0 / 3.0 and back["b"][1] == -2.5e-300

    def test_seventeen_digits_and_nan(self):
        text = dumps({"x": 0.1, "y": float("nan"), "z": 2.0})
        assert '"x": 0.10000000000000001' in text
        assert '"y": null' in text and '"z": 2.0' in text

    def test_key_order_kept(self, tmp_path):
        path = tmp_path / "o.json"
        emit_result({"b": 1, "a": 2}, path)
        assert path.read_text().index('"b"') < path.read_text().index('"a"')


class TestCommands:
    def test_estimate(self, s2_csv, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["estimate", str(s2_csv), "--bandwidth", "0.8", "--inference", "plugin",
                     "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["schema_version"] == SCHEMA_VERSION and doc["kind"] == "estimate"
        assert doc["config"]["estimand"] == "w1" and doc["config"]["bandwidth"] == 0.8
        res = doc["result"]
        assert res["ci"][0] < res["tau_hat"] < res["ci"][1]
        assert res["bandwidths"]["h1"] == pytest.approx(0.64 / doc_sd(s2_csv))

    def test_estimate_is_reproducible(self, s2_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["estimate", str(s2_csv), "--cv", "--bootstrap", "60", "--seed", "4"]
        assert main(args + ["--out", str(a), "--threads", "1"]) == 0
        assert main(args + ["--out", str(b), "--threads", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_diagnose(self, s2_csv, tmp_path):
        out = tmp_path / "d.json"
        assert main(["diagnose", str(s2_csv), "--bootstrap", "50", "--profile-dir",
                     str(tmp_path / "prof"), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["result"]["tests"][0]["covariate"] == "z1"
        assert (tmp_path / "prof" / "profile_z1.csv").exists()

    def test_bandwidth(self, s2_csv, capsys):
        assert main(["bandwidth", str(s2_csv), "--grid", "0.3", "0.6", "0.9"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "h,cv_error,selected" and len(lines) == 4
        assert sum(int(line.split(",")[2]) for line in lines[1:]) == 1

    def test_simulate_report(self, tmp_path):
        out = tmp_path / "m.json"
        assert main(["simulate", "--setting", "2", "--gamma", "1", "--n", "400", "--reps", "5",
                     "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        cfg = doc["result"]["config"]
        assert cfg["setting"] == 2 and cfg["param"] == 1.0 and cfg["reps"] == 5
        assert set(doc["result"]["summaries"]) == {"rd", "wll"}

    def test_simulate_sweep(self, capsys):
        assert main(["simulate", "--setting", "1", "--beta", "2", "--n", "400", "--reps", "4",
                     "--sweep", "3", "--pretreatment"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("h,mse_rd,mse_wll") and len(lines) == 4

    def test_error_record(self, tmp_path, capsys):
        bad = write_csv(tmp_path / "bad.csv", ["y", "x"], [("oops", 0.1)] + [(1, 0.2)] * 12)
        assert main(["estimate", str(bad)]) == 1
        err = capsys.readouterr().err.splitlines()
        record = json.loads(err[0])
        assert record["error"] == "DataError" and "line 2" in record["message"]
        assert err[1].startswith("rdwate: error:")

    def test_usage_error_exit_code(self):
        proc = subprocess.run([sys.executable, "-m", "rdwate.cli", "estimate"],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert json.loads(proc.stderr.splitlines()[0])["error"] == "ArgumentError"


def doc_sd(path):
    return load_csv(path).x.std(ddof=1)
