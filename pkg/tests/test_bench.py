import json

import numpy as np
import pytest

from mddl import SolverConfig, gen_synthetic
from mddl.bench import (BenchConfig, ExperimentSpec, compare_backends,
                        default_experiment_spec, default_transform_family,
                        load_spec, run_experiment, scaling_sweep, spec_from_dict,
                        write_report, write_sweep_csv, write_sweep_svg)

FAST_SOLVER = dict(lam=0.04, tau0=0.1, tau_growth=1.05, tau_cap=1.0,
                   max_iter=120, tol=1e-3)


def small_spec(seed=5, test_count=12, assertions=()):
    return ExperimentSpec(
        dataset={"synthetic": {"d": 36, "n": 6, "s": 3, "separation": 2.0,
                               "seed": seed}},
        configs=[
            BenchConfig("source_only", SolverConfig(weighting_mode="none",
                                                    **FAST_SOLVER), "source"),
            BenchConfig("misc_weighted", SolverConfig(weighting_mode="softmax",
                                                      **FAST_SOLVER)),
        ],
        test_count=test_count,
        assertions=list(assertions),
    )


class TestGenSynthetic:
    def test_deterministic_bytes(self):
        d1, s1 = gen_synthetic(25, 4, 3, 2.0, seed=9, test_count=6)
        d2, s2 = gen_synthetic(25, 4, 3, 2.0, seed=9, test_count=6)
        assert d1.data.tobytes() == d2.data.tobytes()
        for a, b in zip(s1, s2):
            assert a.query.tobytes() == b.query.tobytes()
            assert (a.class_id, a.domain_id) == (b.class_id, b.domain_id)

    def test_seed_changes_data(self):
        d1, _ = gen_synthetic(25, 4, 3, 2.0, seed=9, test_count=2)
        d2, _ = gen_synthetic(25, 4, 3, 2.0, seed=10, test_count=2)
        assert not np.array_equal(d1.data, d2.data)

    def test_shapes_and_normalization(self):
        dic, samples = gen_synthetic(30, 5, 4, 3.0, seed=1, test_count=7)
        assert (dic.d, dic.n, dic.s) == (30, 5, 4)
        assert dic.normalized
        assert len(samples) == 7
        for s in samples:
            assert 0 <= s.class_id < 5 and 0 <= s.domain_id < 4
            assert s.query.shape == (30,)

    def test_infinite_separation_queries_equal_atoms(self):
        dic, samples = gen_synthetic(25, 4, 3, float("inf"), seed=2, test_count=10)
        for s in samples:
            assert np.array_equal(s.query, dic.atom(s.class_id, s.domain_id))

    def test_noise_norm_tracks_separation(self):
        dic, samples = gen_synthetic(64, 4, 2, 4.0, seed=3, test_count=20)
        for s in samples:
            gap = np.linalg.norm(s.query - dic.atom(s.class_id, s.domain_id))
            assert abs(gap - 0.25) < 1e-9

    def test_single_class(self):
        dic, samples = gen_synthetic(16, 1, 2, 2.0, seed=4, test_count=5)
        assert all(s.class_id == 0 for s in samples)

    def test_family_covers_all_kinds_at_large_s(self):
        fam = default_transform_family(64, 16, seed=0)
        kinds = {t.kind for t in fam}
        assert kinds == {"additive_noise", "illumination", "blur", "occlusion"}
        assert len({t.label for t in fam}) == 15

    def test_validation(self):
        with pytest.raises(ValueError, match="positive"):
            gen_synthetic(0, 3, 2, 1.0, seed=0)
        with pytest.raises(ValueError, match="separation"):
            gen_synthetic(9, 3, 2, 0.0, seed=0)
        with pytest.raises(ValueError, match="test_count"):
            gen_synthetic(9, 3, 2, 1.0, seed=0, test_count=0)


class TestRunExperiment:
    def test_report_rows_and_invariants(self):
        report = run_experiment(small_spec())
        assert [r["name"] for r in report.rows] == ["source_only", "misc_weighted"]
        for row in report.rows:
            assert 0.0 <= row["accuracy"] <= row["top5_recall"] <= 1.0
            assert row["failures"] == 0
            assert row["median_solve_time_s"] > 0
        assert report.environment["backend"] in ("numba", "numpy")

    def test_single_sample_accuracy_is_binary(self):
        report = run_experiment(small_spec(test_count=1))
        for row in report.rows:
            assert row["accuracy"] in (0.0, 1.0)

    def test_empty_configs_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            ExperimentSpec(dataset={"synthetic": {}}, configs=[])

    def test_determinism_of_metrics(self):
        r1 = run_experiment(small_spec())
        r2 = run_experiment(small_spec())
        strip = lambda rows: [
            {k: v for k, v in row.items() if not k.endswith("_s")} for row in rows
        ]
        assert strip(r1.rows) == strip(r2.rows)

    def test_assertions_evaluated(self):
        passing = {"type": "recall_dominates"}
        failing = {"type": "min_gap", "a": "source_only", "b": "misc_weighted",
                   "metric": "accuracy", "gap": 2.0}
        report = run_experiment(small_spec(assertions=[passing, failing]))
        assert report.assertion_results[0]["passed"]
        assert not report.assertion_results[1]["passed"]
        assert len(report.failed_assertions) == 1

    def test_unknown_assertion_config_fails_gracefully(self):
        report = run_experiment(small_spec(assertions=[
            {"type": "range", "config": "nope", "lo": 0, "hi": 1}]))
        assert not report.assertion_results[0]["passed"]

    def test_report_files_written(self, tmp_path):
        spec = small_spec()
        spec.output_path = str(tmp_path / "report")
        report = run_experiment(spec)
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["rows"][0]["name"] == "source_only"
        assert (tmp_path / "report.txt").read_text().startswith("config")
        assert report.table()

    def test_manifest_dataset_round_trip(self, tmp_path):
        # feed the experiment from saved files instead of the generator
        from mddl import save_dictionary
        from mddl.dictionary import _write_matrix
        dic, samples = gen_synthetic(25, 4, 3, 3.0, seed=11, test_count=8)
        save_dictionary(dic, tmp_path / "dict.json")
        queries = np.column_stack([s.query for s in samples])
        _write_matrix(tmp_path / "queries.bin", queries)
        truth = {"class_ids": [s.class_id for s in samples],
                 "domain_ids": [s.domain_id for s in samples]}
        (tmp_path / "truth.json").write_text(json.dumps(truth))
        spec = ExperimentSpec(
            dataset={"manifest": {"dictionary": str(tmp_path / "dict.json"),
                                  "queries": str(tmp_path / "queries.bin"),
                                  "truth": str(tmp_path / "truth.json")}},
            configs=[BenchConfig("w", SolverConfig(weighting_mode="softmax",
                                                   **FAST_SOLVER))],
            test_count=8,
        )
        report = run_experiment(spec)
        assert report.rows[0]["accuracy"] > 0.5

    def test_spec_parsing(self, tmp_path):
        raw = {
            "dataset": {"synthetic": {"d": 36, "n": 6, "s": 3,
                                      "separation": 2.0, "seed": 5}},
            "test_count": 4,
            "solver_configs": [
                {"name": "a", "dictionary": "source", "lambda": 0.05,
                 "weighting": "none", "tau_cap": 1.0},
                {"name": "b", "l2": 0.1, "weighting": "softmax", "tau_cap": 1.0},
            ],
            "assertions": [{"type": "recall_dominates"}],
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(raw))
        spec = load_spec(path)
        assert spec.configs[0].solver.lam == 0.05
        assert spec.configs[1].solver.l2_penalty == 0.1
        assert spec.configs[1].dictionary == "miscellaneous"
        report = run_experiment(spec)
        assert len(report.rows) == 2

    def test_default_spec_structure(self):
        spec = default_experiment_spec()
        assert {c.name for c in spec.configs} == \
            {"source_only", "misc_unweighted", "misc_weighted"}
        assert spec.dataset["synthetic"]["d"] == 256


class TestScalingSweep:
    def test_small_sweep_rows(self, tmp_path):
        report = scaling_sweep(d=36, n=5, s_values=(1, 2), repeats=3, seed=1)
        assert [r["s"] for r in report.rows] == [1, 2]
        for row in report.rows:
            assert row["median_weighted_s"] > 0
            assert row["median_unweighted_s"] > 0
        assert report.ratio("unweighted", 2, 1) > 0
        write_sweep_csv(report, tmp_path / "sweep.csv")
        write_sweep_svg(report, tmp_path / "sweep.svg")
        assert (tmp_path / "sweep.csv").read_text().startswith("s,median")
        assert "<svg" in (tmp_path / "sweep.svg").read_text()
        assert report.table()

    def test_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            scaling_sweep(s_values=(4, 1), repeats=2)
        with pytest.raises(ValueError, match="repeats"):
            scaling_sweep(s_values=(1,), repeats=0)
        with pytest.raises(ValueError, match="nonempty"):
            scaling_sweep(s_values=(), repeats=2)


class TestCompareBackends:
    def test_rows_per_backend(self):
        rows = compare_backends(d=25, n=4, s=2, repeats=2, seed=3)
        paths = {(r["path"], r["backend"]) for r in rows}
        assert ("weighted", "numpy") in paths
        assert ("unweighted", "numpy") in paths
        from mddl.backend import NUMBA_AVAILABLE
        if NUMBA_AVAILABLE:
            assert ("weighted", "numba") in paths
