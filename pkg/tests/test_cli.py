"""Command-line interface: artifacts, exit codes, and determinism."""

import json

import numpy as np
import numpy.testing as npt
import pytest

from switchgrowth.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPerron:
    def test_dim2(self, tmp_path, capsys):
        code, out, _ = run(capsys, "perron", "--preset", "dim2",
                           "--out", str(tmp_path))
        assert code == 0
        assert out.startswith("perron:")
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["command"] == "perron"
        assert len(summary["vertices"]) == 2
        npt.assert_allclose(summary["alphaStar"], 0.5, atol=1e-7)
        npt.assert_allclose(summary["lambdaStar"], 0.5, atol=1e-10)
        # vertex rates of the exchange family at alpha = 0.2 and 0.8
        for v in summary["vertices"]:
            npt.assert_allclose(v["lambda"], np.sqrt(0.2 * 0.8), atol=1e-10)
            npt.assert_allclose(sum(v["e1"]), 1.0, atol=1e-12)


class TestSweep:
    def test_dim2_closed_form(self, tmp_path, capsys):
        code, _, _ = run(capsys, "sweep", "--preset", "dim2",
                         "--grid", "50", "--out", str(tmp_path))
        assert code == 0
        rows = (tmp_path / "lambda_sweep.csv").read_text().strip().splitlines()
        assert rows[0] == "alpha,lambda,dlambda_dalpha"
        assert len(rows) == 51
        for line in rows[1:]:
            alpha, lam, dlam = map(float, line.split(","))
            npt.assert_allclose(lam, np.sqrt(alpha * (1 - alpha)), atol=1e-9)
            npt.assert_allclose(dlam, (1 - 2 * alpha)
                                / (2 * np.sqrt(alpha * (1 - alpha))), atol=1e-9)

    def test_degenerate_segment(self, tmp_path, capsys):
        model = {"kind": "segment",
                 "G": [[0.0, 1.0], [0.0, 0.0]],
                 "F": [[0.0, -1.0], [1.0, 0.0]],
                 "range": [0.5, 0.5]}
        path = tmp_path / "model.json"
        path.write_text(json.dumps(model))
        code, _, _ = run(capsys, "sweep", "--model", str(path),
                         "--out", str(tmp_path))
        assert code == 0
        rows = (tmp_path / "lambda_sweep.csv").read_text().strip().splitlines()
        assert len(rows) == 2  # header + single point
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["points"] == 1

    def test_vertices_model_rejected(self, tmp_path, capsys):
        model = {"kind": "vertices",
                 "matrices": [[[0.0, 1.0], [1.0, 0.0]]]}
        path = tmp_path / "model.json"
        path.write_text(json.dumps(model))
        code, out, err = run(capsys, "sweep", "--model", str(path),
                             "--out", str(tmp_path))
        assert code == 2
        assert json.loads(err)["error"] == "WrongVariantError"


class TestGrowth:
    def test_dim2_small_grid(self, tmp_path, capsys):
        code, out, _ = run(capsys, "growth", "--preset", "dim2",
                           "--grid", "400", "--horizon", "120",
                           "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        npt.assert_allclose(summary["lambda"], 0.5, atol=2e-3)
        assert summary["attractor"]["kind"] == "fixed-point"
        assert not summary["slack"]["certified"]
        sol_rows = (tmp_path / "hj_solution.csv").read_text().strip().splitlines()
        assert sol_rows[0] == "y1,y2,u,feedback_vertex"
        assert len(sol_rows) == 1 + 401


class TestTrajectory:
    def test_dim2(self, tmp_path, capsys):
        code, _, _ = run(capsys, "trajectory", "--preset", "dim2",
                         "--grid", "400", "--horizon", "120",
                         "--out", str(tmp_path))
        assert code == 0
        rows = (tmp_path / "trajectory.csv").read_text().strip().splitlines()
        assert rows[0] == "t,y1,y2,logmass"
        summary = json.loads((tmp_path / "summary.json").read_text())
        npt.assert_allclose(summary["trajectoryRate"], 0.5, atol=5e-3)


class TestCriteria:
    def test_limit_cycle(self, tmp_path, capsys):
        code, out, _ = run(capsys, "criteria", "--preset", "limit-cycle",
                           "--omega", "1.0,10.0", "--out", str(tmp_path))
        assert code == 0
        assert "periodic-improves" in out
        report = json.loads((tmp_path / "criteria.json").read_text())
        npt.assert_allclose(report["alphaStar"], 0.415, atol=0.01)
        assert report["highFreq"] > 0
        assert report["legendre"] < 0
        assert report["identityResidual"] <= 1e-8
        assert set(report["floquetSecondAt"]) == {"1.0", "10.0"}
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["command"] == "criteria"

    def test_dim2_constant_optimal(self, tmp_path, capsys):
        code, out, _ = run(capsys, "criteria", "--preset", "dim2",
                           "--out", str(tmp_path))
        assert code == 0
        assert "constant-optimal" in out


class TestErgodicSet:
    def test_dim2(self, tmp_path, capsys):
        code, out, _ = run(capsys, "ergodic-set", "--preset", "dim2",
                           "--trials", "5", "--horizon", "200",
                           "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["inside_pass"] == 5
        assert summary["attract_pass"] == 5
        rows = (tmp_path / "ergodic_boundary.csv").read_text().strip().splitlines()
        assert rows[0] == "y1,y2"
        pts = np.array([list(map(float, r.split(","))) for r in rows[1:]])
        npt.assert_allclose(pts, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-6)


class TestContraction:
    def test_dim2(self, tmp_path, capsys):
        code, out, _ = run(capsys, "contraction", "--preset", "dim2",
                           "--trials", "20", "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        npt.assert_allclose(summary["mu"], 2.0 * np.sqrt(0.2 * 0.8),
                            atol=1e-12)
        assert all(c["passes"] == 20 for c in summary["checks"])

    def test_pmca_no_rate(self, tmp_path, capsys):
        code, out, _ = run(capsys, "contraction", "--preset", "pmca",
                           "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["mu"] is None and summary["checks"] == []


class TestPreset:
    def test_list(self, tmp_path, capsys):
        code, out, _ = run(capsys, "preset", "list", "--out", str(tmp_path))
        assert code == 0
        assert "dim2" in out and "pmca" in out and "limit-cycle" in out

    def test_export_roundtrip(self, tmp_path, capsys):
        code, _, _ = run(capsys, "preset", "export", "pmca",
                         "--out", str(tmp_path))
        assert code == 0
        code, _, _ = run(capsys, "sweep", "--model",
                         str(tmp_path / "pmca.json"), "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["boundary"] is True
        npt.assert_allclose(summary["alphaStar"], 8.0)

    def test_export_requires_name(self, tmp_path, capsys):
        code, _, err = run(capsys, "preset", "export", "--out", str(tmp_path))
        assert code == 2
        assert json.loads(err)["error"] == "UsageError"


class TestErrors:
    def test_malformed_model(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _, err = run(capsys, "perron", "--model", str(path),
                           "--out", str(tmp_path))
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "JSONDecodeError"

    def test_missing_model_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "perron", "--model",
                           str(tmp_path / "nope.json"), "--out", str(tmp_path))
        assert code == 2

    def test_both_model_sources(self, tmp_path, capsys):
        code, _, err = run(capsys, "perron", "--preset", "dim2",
                           "--model", "x.json", "--out", str(tmp_path))
        assert code == 2
        assert json.loads(err)["error"] == "UsageError"

    def test_neither_model_source(self, tmp_path, capsys):
        code, _, err = run(capsys, "perron", "--out", str(tmp_path))
        assert code == 2


class TestDeterminism:
    def test_byte_identical_artifacts(self, tmp_path, capsys):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            code, _, _ = run(capsys, "sweep", "--preset", "limit-cycle",
                             "--grid", "40", "--out", str(out))
            assert code == 0
            outs.append((out / "summary.json").read_bytes()
                        + (out / "lambda_sweep.csv").read_bytes())
        assert outs[0] == outs[1]
