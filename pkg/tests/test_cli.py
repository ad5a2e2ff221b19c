import json

import numpy as np
import pytest

from pairprobit.cli import main


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def dataset(tmp_path):
    prefix = tmp_path / "sim"
    code = run(["simulate", "--q", 3, "--k", 3, "--n", 300, "--zero-frac", 0.0,
                "--seed", 5, "--thresholds=-0.5,0.5", "--out-prefix", prefix])
    assert code == 0
    return prefix


class TestSimulate:
    def test_writes_dataset_and_truth(self, tmp_path):
        prefix = tmp_path / "out"
        code = run(["simulate", "--q", 10, "--k", 4, "--n", 300,
                    "--zero-frac", 0.3, "--seed", 7, "--out-prefix", prefix])
        assert code == 0
        rows = np.loadtxt(f"{prefix}_data.csv", delimiter=",", dtype=int)
        assert rows.shape == (300, 10)
        assert rows.min() >= 1 and rows.max() <= 4
        truth = json.loads((tmp_path / "out_truth.json").read_text())
        assert len(truth["rhos"]) == 45
        assert len(truth["thresholds"]) == 10
        manifest = json.loads((tmp_path / "out_data.csv.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 7

    def test_invalid_n(self, tmp_path, capsys):
        code = run(["simulate", "--q", 3, "--k", 4, "--n", 0,
                    "--out-prefix", tmp_path / "x"])
        assert code == 2
        assert "error" in capsys.readouterr().err
        assert not (tmp_path / "x_data.csv").exists()

    def test_deterministic_bytes(self, tmp_path):
        args = ["simulate", "--q", 4, "--k", 4, "--n", 100, "--zero-frac", 0.3,
                "--seed", 3]
        run(args + ["--out-prefix", tmp_path / "a"])
        run(args + ["--out-prefix", tmp_path / "b"])
        assert (tmp_path / "a_data.csv").read_bytes() == \
            (tmp_path / "b_data.csv").read_bytes()
        assert (tmp_path / "a_truth.json").read_bytes() == \
            (tmp_path / "b_truth.json").read_bytes()

    def test_k_without_menu_requires_thresholds(self, tmp_path):
        code = run(["simulate", "--q", 3, "--k", 3, "--n", 10,
                    "--out-prefix", tmp_path / "x"])
        assert code == 2


class TestFit:
    def test_report_contents(self, dataset, tmp_path):
        out = tmp_path / "report.json"
        code = run(["fit", "--data", f"{dataset}_data.csv", "--k", 3,
                    "--level", 0.95, "--out", out])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["z_multiplier"] == pytest.approx(1.959964, abs=1e-6)
        assert report["n"] == 300 and report["q"] == 3 and report["k"] == 3
        assert len(report["parameters"]) == 3 + 2 * 3
        names = [p["name"] for p in report["parameters"]]
        assert names[0] == "rho[1,2]" and names[-1] == "a[2](3)"
        for p in report["parameters"]:
            assert p["lower"] <= p["estimate"] <= p["upper"]
        g = np.asarray(report["godambe"]["G"])
        assert g.shape == (9, 9)
        assert report["converged"] is True

    def test_corrupt_row_names_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n2,x\n1,1\n")
        code = run(["fit", "--data", path])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_ragged_row_names_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n2\n")
        code = run(["fit", "--data", path])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_category_is_validation_error(self, tmp_path, capsys):
        path = tmp_path / "gap.csv"
        path.write_text("1,1\n3,3\n1,3\n3,1\n")
        code = run(["fit", "--data", path, "--k", 3])
        assert code == 2
        assert "category 2" in capsys.readouterr().err

    def test_deterministic_report(self, dataset, tmp_path):
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            run(["fit", "--data", f"{dataset}_data.csv", "--out", out])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestStudy:
    def _config(self, tmp_path, **kw):
        cfg = {"q": 2, "k": 3, "sample_sizes": [150], "replicates": 2,
               "level": 0.95, "zero_fraction": 0.0,
               "threshold_menu": [[-0.5, 0.5]], "seed": 4}
        cfg.update(kw)
        path = tmp_path / "study.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_smoke_and_tables(self, tmp_path):
        cfg = self._config(tmp_path)
        out = tmp_path / "study_out.json"
        code = run(["study", "--config", cfg, "--out", out, "--serial"])
        assert code == 0
        report = json.loads(out.read_text())
        sc = report["scenarios"][0]
        assert {"mse", "mean_std_error", "coverage"} <= set(sc)
        assert len(sc["mse"]) == len(report["parameter_names"])

    def test_identical_config_identical_report(self, tmp_path):
        cfg = self._config(tmp_path)
        out1 = tmp_path / "s1.json"
        out2 = tmp_path / "s2.json"
        run(["study", "--config", cfg, "--out", out1, "--serial"])
        run(["study", "--config", cfg, "--out", out2, "--serial"])
        assert out1.read_bytes() == out2.read_bytes()

    def test_invalid_config(self, tmp_path, capsys):
        cfg = self._config(tmp_path, replicates=0)
        code = run(["study", "--config", cfg, "--out", tmp_path / "x.json"])
        assert code == 2


class TestBenchGrad:
    def test_table_and_discrepancy(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = run(["bench-grad", "--q-list", "3,4", "--n", 30, "--k", 3,
                    "--reps", 1, "--out", out])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("q,n_params")
        assert len(lines) == 3
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[-1]) <= 1e-5  # analytic vs numeric agreement

    def test_bad_qlist(self, tmp_path):
        assert run(["bench-grad", "--q-list", "1"]) == 2


class TestBenchKernel:
    def test_smoke(self, tmp_path):
        out = tmp_path / "kernel.csv"
        code = run(["bench-kernel", "--q", 3, "--k", 3, "--n", 50,
                    "--reps", 2, "--out", out])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "backend,op,median_seconds"
        assert len(lines) >= 3


class TestRerun:
    def test_simulate_rerun_reproduces_bytes(self, tmp_path):
        prefix = tmp_path / "orig"
        run(["simulate", "--q", 3, "--k", 4, "--n", 50, "--zero-frac", 0.3,
             "--seed", 12, "--out-prefix", prefix])
        manifest = f"{prefix}_data.csv.manifest.json"
        code = run(["rerun", "--manifest", manifest,
                    "--out-prefix", tmp_path / "again"])
        assert code == 0
        assert (tmp_path / "orig_data.csv").read_bytes() == \
            (tmp_path / "again_data.csv").read_bytes()

    def test_missing_manifest(self, tmp_path):
        assert run(["rerun", "--manifest", tmp_path / "nope.json"]) == 2


class TestExitCodes:
    def test_runtime_failure_is_one(self, tmp_path, capsys):
        # 3 rows cannot exhibit 5 categories: every replicate fails and the
        # study aborts with a runtime failure
        cfg = tmp_path / "doomed.json"
        cfg.write_text(json.dumps(
            {"q": 2, "k": 5, "sample_sizes": [3], "replicates": 1,
             "threshold_menu": [[-1.0, 0.0, 0.5, 1.0]], "seed": 0}))
        code = run(["study", "--config", cfg, "--out", tmp_path / "x.json",
                    "--serial"])
        assert code == 1
        assert "failure" in capsys.readouterr().err
