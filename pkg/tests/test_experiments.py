import json
import math

import numpy as np
import pytest

from conelab.experiments import (ExperimentReport, build_host, canonical_json,
                                 run_experiment, run_gauss_bonnet,
                                 run_inclusion_audit, run_packing_sum,
                                 run_singular_count, run_volume_estimate)


class TestCanonicalJson:
    def test_sorted_keys_and_float_format(self):
        doc = {"b": 1.0 / 3.0, "a": [1, 2.5, True, None]}
        text = canonical_json(doc)
        assert text.index('"a"') < text.index('"b"')
        assert "0.33333333333333331" in text

    def test_roundtrips_through_json(self):
        doc = {"x": 0.1, "y": [1e-17, 2.0 ** -40]}
        parsed = json.loads(canonical_json(doc))
        assert parsed["x"] == 0.1
        assert parsed["y"][1] == 2.0 ** -40


class TestGaussBonnet:
    def test_all_hosts_pass(self):
        rep = run_gauss_bonnet({"spike_iterations": [1, 2, 3]})
        assert rep.passed
        assert any(r["host"] == "cube" for r in rep.records)

    def test_deficits_recorded(self):
        rep = run_gauss_bonnet({"spike_iterations": [1]})
        for r in rep.records:
            assert abs(r["total_deficit"] - 4 * math.pi) < 1e-9


class TestSingularCount:
    def test_bounds_and_growth(self):
        rep = run_singular_count({"spike_iterations": [1, 2, 3, 4]})
        assert rep.passed
        faces = [r["faces"] for r in rep.records]
        assert faces == [4, 12, 36, 108]


class TestPackingSum:
    def test_counterexample_family(self):
        rep = run_packing_sum({"spike_iterations": [2, 3],
                               "counterexample_depth": 6, "net_h": 0.06})
        assert rep.verdicts["counterexample-all-singular"]
        assert rep.measured["counterexample_count"] == 7


class TestVolumeEstimate:
    def test_exponent_near_two(self):
        rep = run_volume_estimate({"spike_iteration": 3, "net_h": 0.05})
        assert rep.verdicts["exponent>=1.8"], rep.measured
        assert rep.verdicts["exponent<=2.4"], rep.measured


class TestInclusionAudit:
    def test_zero_exceptions(self):
        rep = run_inclusion_audit({"points": 6, "eps": [0.05, 0.1],
                                   "r": [2.0 ** -3, 2.0 ** -4]})
        assert rep.verdicts["weak-subset-strong"]
        assert rep.verdicts["weak-subset-symmetric"]


class TestDeterminism:
    def test_byte_identical_reports(self):
        cfg = {"spike_iterations": [1, 2], "seed": 13}
        a = run_gauss_bonnet(dict(cfg)).to_json()
        b = run_gauss_bonnet(dict(cfg)).to_json()
        assert a == b

    def test_runtime_excluded_from_payload(self):
        rep = run_gauss_bonnet({"spike_iterations": [1]})
        assert "runtime" not in rep.to_json()
        assert "runtime_seconds" in rep.to_json(with_runtime=True)

    def test_unknown_experiment(self):
        with pytest.raises(KeyError):
            run_experiment("nope", {})


class TestBuildHost:
    def test_specs(self):
        h1 = build_host("cone:0.05")
        assert h1.cone.total_angle == pytest.approx(2 * math.pi * 0.05)
        h2 = build_host("spike:2", net_h=0.08)
        assert len(h2.surface.faces) == 12
        with pytest.raises(ValueError):
            build_host("torus:1")
