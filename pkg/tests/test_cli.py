import json

import pytest

from framedisc.cli import EXIT_CERTIFICATION, EXIT_CONFIG, EXIT_NUMERICAL, \
    EXIT_OK, EXIT_PROPERTY, main


def run(tmp_path, command, **options):
    out = tmp_path / "report.json"
    args = [command, "--output", str(out)]
    for key, value in options.items():
        args += [f"--{key.replace('_', '-')}", str(value)]
    code = main(args)
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc


BASE = dict(model_kind="orthonormal", dim=6, covering_width="singleton")


class TestValidate:
    def test_partition_config(self, tmp_path):
        code, doc = run(tmp_path, "validate", **BASE)
        assert code == EXIT_OK
        assert doc["N"] == 1
        assert doc["admissible"] and doc["moderate"]
        assert doc["C_mU"] == 1.0

    def test_uncovered_point_fails(self, tmp_path):
        code, doc = run(tmp_path, "validate", model_kind="orthonormal", dim=6,
                        covering_sets=json.dumps([[0, 1], [3, 4, 5]]))
        assert code == EXIT_PROPERTY
        assert doc["admissible"] is False
        assert doc["uncovered_points"] == [2]

    def test_report_matches_library(self, tmp_path):
        from framedisc import Weight2D, uniform_covering, validate_covering, \
            weight_compatibility
        from framedisc.models import build_orthonormal_model
        code, doc = run(tmp_path, "validate", model_kind="orthonormal", dim=8,
                        covering_width=2.0)
        model = build_orthonormal_model(8)
        cov = uniform_covering(model.space, 2.0)
        rep = validate_covering(cov)
        assert code == EXIT_OK
        assert doc["N"] == rep.overlap_bound
        assert doc["D"] == rep.min_measure
        assert doc["C_tilde"] == rep.moderateness
        assert doc["C_mU"] == weight_compatibility(
            cov, Weight2D.constant(model.space))

    def test_missing_covering_is_config_error(self, tmp_path):
        code, _ = run(tmp_path, "validate", model_kind="orthonormal", dim=6)
        assert code == EXIT_CONFIG

    def test_grid_file_input(self, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"points": [[0.0], [1.0], [2.0]],
                                    "weights": [1.0, 1.0, 2.0]}))
        code, doc = run(tmp_path, "validate", grid_file=str(grid),
                        covering_sets=json.dumps([[0, 1], [1, 2]]))
        assert code == EXIT_OK
        assert doc["N"] == 2
        assert doc["D"] == 2.0


class TestOsc:
    def test_singleton_covering_passes(self, tmp_path):
        code, doc = run(tmp_path, "osc", **BASE, delta=0.3)
        assert code == EXIT_OK
        assert doc["osc_norm"] == 0.0
        assert doc["holds_D"] and doc["holds_58"]

    def test_zero_delta_always_fails(self, tmp_path):
        code, doc = run(tmp_path, "osc", **BASE, delta=0.0)
        assert code == EXIT_PROPERTY
        assert doc["holds_D"] is False

    def test_refine_mode_deterministic(self, tmp_path):
        opts = dict(model_kind="gabor", n_time=16, n_freq=16, window_width=4.0,
                    delta=0.2, refine_max_rounds=10)
        code1, doc1 = run(tmp_path, "osc", **opts)
        code2, doc2 = run(tmp_path, "osc", **opts)
        assert code1 == code2 == EXIT_OK
        assert doc1 == doc2
        assert doc1["holds_D"] and doc1["holds_58"]


class TestDiscretize:
    def test_orthonormal_singleton_plan(self, tmp_path):
        code, doc = run(tmp_path, "discretize", **BASE, delta=0.3, n_trials=10)
        assert code == EXIT_OK
        assert doc["constants"]["C1"] == pytest.approx(1.0, abs=1e-10)
        assert doc["constants"]["C2"] == pytest.approx(1.0, abs=1e-10)
        assert doc["failing_checks"] == []

    def test_non_contractive_neumann_refused(self, tmp_path):
        code, doc = run(tmp_path, "discretize", model_kind="random-smooth",
                        dim=3, n_points=48, smoothness=2.5, model_seed=1,
                        covering_width=2 / 48, delta=0.5, n_trials=5)
        assert code == EXIT_CERTIFICATION
        assert doc is None

    def test_certified_run_green(self, tmp_path):
        code, doc = run(tmp_path, "discretize", model_kind="random-smooth",
                        dim=3, n_points=96, smoothness=3.0, model_seed=1,
                        covering_width=2 / 96, delta=0.25, n_trials=10)
        assert code == EXIT_OK
        assert doc["certificates"]["holds_58"]
        assert doc["residuals"]["atomic_max"] <= 1e-8
        assert doc["residuals"]["banach_max"] <= 1e-8
        assert doc["residuals_swapped"]["atomic_max"] <= 1e-8
        assert doc["cross_method_gap"] <= 1e-9
        assert doc["bounds"]["violations"] == 0

    def test_smooth_pou_medoid_variant(self, tmp_path):
        code, doc = run(tmp_path, "discretize", model_kind="random-smooth",
                        dim=3, n_points=96, smoothness=3.0, model_seed=1,
                        covering_width=2 / 96, delta=0.25, n_trials=5,
                        pou="smooth", sampling="medoid",
                        inversion_method="direct")
        assert code == EXIT_OK
        assert doc["inversion_method"] == "direct"
        assert doc["failing_checks"] == []

    def test_rank_deficient_direct_is_numerical_failure(self, tmp_path):
        code, doc = run(tmp_path, "discretize", model_kind="orthonormal",
                        dim=6, covering_sets=json.dumps([[0, 1, 2], [3, 4, 5]]),
                        delta=0.3, inversion_method="direct", n_trials=5)
        assert code == EXIT_NUMERICAL
        assert doc is None

    def test_bad_config_exit_code(self, tmp_path):
        code, _ = run(tmp_path, "discretize", model_kind="nonsense")
        assert code == EXIT_CONFIG

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model-kind": "orthonormal", "dim": 4,
                                   "covering-width": "singleton",
                                   "delta": 0.3, "n-trials": 5}))
        out = tmp_path / "r.json"
        code = main(["discretize", "--config", str(cfg), "--dim", "5",
                     "--output", str(out)])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert len(doc["samples"]) == 5

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model-kin": "orthonormal"}))
        assert main(["discretize", "--config", str(cfg)]) == EXIT_CONFIG


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path):
        opts = dict(model_kind="random-smooth", dim=3, n_points=96,
                    smoothness=3.0, model_seed=1, covering_width=2 / 96,
                    delta=0.25, seed=11, n_trials=10)
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["discretize", "--output", str(out1)]
                    + sum([[f"--{k.replace('_', '-')}", str(v)]
                           for k, v in opts.items()], [])) == EXIT_OK
        assert main(["discretize", "--output", str(out2)]
                    + sum([[f"--{k.replace('_', '-')}", str(v)]
                           for k, v in opts.items()], [])) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()


class TestReportMerge:
    def test_csv_summary(self, tmp_path):
        _, _ = run(tmp_path, "osc", **BASE, delta=0.3)
        first = tmp_path / "report.json"
        second = tmp_path / "second.json"
        second.write_text(first.read_text())
        out = tmp_path / "merged.csv"
        code = main(["report-merge", str(first), str(second),
                     "--output", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert "osc_norm" in lines[0]
