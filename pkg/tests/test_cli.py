import json
import subprocess
import sys

import pytest

from conelab.cli import main
from conelab.surfaces import load_obj


def run_cli(args):
    return main(list(args))


class TestGen:
    def test_spike_obj_face_count(self, tmp_path):
        out = tmp_path / "spike.obj"
        stats = tmp_path / "stats.json"
        code = run_cli(["gen", "spike", "--iters", "3", "--out", str(out),
                        "--stats", str(stats)])
        assert code == 0
        surf = load_obj(str(out))
        assert len(surf.faces) == 36         # 4 * 3^(k-1) at k = 3
        doc = json.loads(stats.read_text())
        assert doc["face_count"] == 36

    def test_cone_obj(self, tmp_path):
        out = tmp_path / "cone.obj"
        assert run_cli(["gen", "cone", "--angle", "1.2", "--segments", "32",
                        "--out", str(out)]) == 0
        surf = load_obj(str(out))
        assert abs(surf.cone_angle(0) - 1.2) < 1e-9

    def test_subgraph_obj(self, tmp_path):
        out = tmp_path / "sub.obj"
        assert run_cli(["gen", "subgraph", "--cantor-gen", "2",
                        "--out", str(out)]) == 0
        assert out.exists()


class TestVerify:
    def test_gauss_bonnet_ok(self, tmp_path):
        out = tmp_path / "spike.obj"
        run_cli(["gen", "spike", "--iters", "2", "--out", str(out)])
        assert run_cli(["verify", "gauss-bonnet", "--mesh", str(out)]) == 0

    def test_oracle_agreement(self, tmp_path):
        out = tmp_path / "spike.obj"
        run_cli(["gen", "spike", "--iters", "2", "--out", str(out)])
        assert run_cli(["verify", "oracle-agreement", "--mesh", str(out),
                        "--eps", "0.6", "--net-h", "0.08"]) == 0


class TestRun:
    def test_byte_identical_reports(self, tmp_path):
        r1 = tmp_path / "a.json"
        r2 = tmp_path / "b.json"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"spike_iterations": [1, 2]}))
        assert run_cli(["run", "gauss-bonnet", "--config", str(cfg),
                        "--report", str(r1)]) == 0
        assert run_cli(["run", "gauss-bonnet", "--config", str(cfg),
                        "--report", str(r2)]) == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_report_schema(self, tmp_path):
        r = tmp_path / "r.json"
        run_cli(["run", "singular-count", "--report", str(r)])
        doc = json.loads(r.read_text())
        assert doc["schema_version"] == 1
        assert doc["passed"] is True
        assert "records" in doc and "verdicts" in doc


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert run_cli(["frobnicate"]) == 2

    def test_missing_required(self):
        assert run_cli(["gen", "spike"]) == 2

    def test_analyze_without_host(self):
        assert run_cli(["analyze", "singular"]) == 2


class TestExport:
    def test_annotated_export(self, tmp_path):
        mesh = tmp_path / "m.obj"
        run_cli(["gen", "spike", "--iters", "2", "--out", str(mesh)])
        out = tmp_path / "annotated.obj"
        assert run_cli(["export", "--mesh", str(mesh), "--out", str(out),
                        "--eps", "0.6", "--net-h", "0.08"]) == 0
        doc = json.loads((tmp_path / "annotated.obj.annotations.json")
                         .read_text())
        assert len(doc["vertices"]) == 8
        first = doc["vertices"]["0"]
        assert "cone_angle" in first and "strong_singular" in first


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "t.obj"
        proc = subprocess.run(
            [sys.executable, "-m", "conelab.cli", "gen", "spike",
             "--iters", "1", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert out.exists()
