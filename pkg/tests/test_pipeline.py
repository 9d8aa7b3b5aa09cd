import io
import os
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path

import pandas as pd
import yaml
from joblib import Parallel, delayed

from src.alignment.io import read_anchors, read_transform
from src.datasets.metrics import ModuleRecord
from src.datasets.synthetic import generate_version_pair, write_synthetic_experiment
from src.embeddings.io import read_embedding
from src.errors import ConfigurationError
from src.graphs.io import read_graph
from src.learners.forest import load_model
from src.main import main
from src.outputs.report import ReportWriter
from src.pipeline.cache import ArtifactCache, make_key, tree_digest
from src.pipeline.config import (
    check_experiment_file,
    load_experiment_config,
    parse_experiment_config,
    validate_experiment,
)
from src.pipeline.runner import ExperimentRunner, derive_seed, pipeline
from tests.fixtures import SAMPLE_EDGES, SAMPLE_SOURCE, make_records, write_records, write_tree

SMALL = {
    "embedding": {
        "dim": 8,
        "node2vec": {"walks_per_node": 4, "walk_length": 10, "window": 3},
        "line2": {"sample_count": 2000},
    },
    "learner": {"n_trees": 10},
    "evaluation": {"repetitions": 2, "base_seed": 0},
}


def small_experiment(root: Path, scenarios, seed: int = 3, **overrides) -> Path:
    pair = generate_version_pair(community_sizes=(15, 15), p_in=0.3, seed=seed)
    return write_synthetic_experiment(pair, root, seed=seed, extra={**SMALL, "scenarios": list(scenarios), **overrides})


def codes(diagnostics):
    return {d.code for d in diagnostics}


class TestExperimentConfig(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        write_records(self.dir / "old.csv", make_records(["A", "B"]))
        write_records(self.dir / "new.csv", make_records(["A", "B"]))
        (self.dir / "old.cdn").write_text("cdn v1\n")

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, data: dict) -> Path:
        path = self.dir / "experiment.yaml"
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        return path

    def pair(self, **overrides) -> dict:
        pair = {"id": "p", "old": {"graph": "old.cdn", "metrics": "old.csv"}, "new": {"graph": "old.cdn", "metrics": "new.csv"}}
        pair.update(overrides)
        return pair

    def test_defaults_and_relative_paths(self):
        config = load_experiment_config(self.write({"pairs": [self.pair()]}))
        self.assertEqual(config.embedding.dim, 32)
        self.assertEqual(config.alignment.anchor_counts(32), [32, 64, 128, None])
        self.assertEqual(config.resolve("old.csv"), self.dir.resolve() / "old.csv")
        self.assertEqual(validate_experiment(config), [])

    def test_missing_metrics_file(self):
        pair = self.pair(new={"graph": "old.cdn", "metrics": "gone.csv"})
        config, diagnostics = check_experiment_file(self.write({"pairs": [pair]}))
        self.assertIsNotNone(config)
        missing = [d for d in diagnostics if d.code == "missing-file"]
        self.assertEqual(len(missing), 1)
        self.assertTrue(missing[0].is_fatal)
        self.assertIn("gone.csv", missing[0].file)

    def test_few_anchors_is_a_warning(self):
        config = parse_experiment_config(
            {"pairs": [self.pair()], "embedding": {"dim": 16}, "alignment": {"anchors": [8, "all"]}}, self.dir
        )
        diagnostics = validate_experiment(config)
        self.assertEqual(codes(diagnostics), {"few-anchors"})
        self.assertFalse(any(d.is_fatal for d in diagnostics))

    def test_every_problem_is_reported(self):
        config = parse_experiment_config(
            {"scenarios": ["static_only", "emb_magic"], "algorithms": ["gcn"], "alignment": {"method": "affine"}}, self.dir
        )
        self.assertTrue({"no-pairs", "unknown-scenario", "unknown-algorithm", "unknown-method"} <= codes(validate_experiment(config)))

    def test_schema_errors(self):
        with self.assertRaises(ConfigurationError) as ctx:
            parse_experiment_config({"pairs": [{"old": {"metrics": "a.csv"}, "new": {"metrics": "b.csv"}}]})
        self.assertGreaterEqual(len(ctx.exception.diagnostics), 2)
        self.assertTrue(all(d.code == "invalid-value" for d in ctx.exception.diagnostics))

    def test_missing_experiment_file(self):
        config, diagnostics = check_experiment_file(self.dir / "nope.yaml")
        self.assertIsNone(config)
        self.assertEqual(codes(diagnostics), {"missing-file"})


class TestArtifactCache(unittest.TestCase):

    def test_hit_after_miss(self):
        calls = []

        def build():
            calls.append(1)
            return "artifact"

        with tempfile.TemporaryDirectory() as tmp:
            cache = ArtifactCache(tmp)
            write = lambda value, path: Path(path).write_text(value)
            read = lambda path: Path(path).read_text()
            first, path = cache.get_or_create("stage", make_key("x", 1), ".txt", build, write, read)
            second, _ = cache.get_or_create("stage", make_key("x", 1), ".txt", build, write, read)
            cache.get_or_create("stage", make_key("x", 2), ".txt", build, write, read)
            self.assertTrue(path.exists())
        self.assertEqual((first, second), ("artifact", "artifact"))
        self.assertEqual(len(calls), 2)
        self.assertEqual(cache.statistics(), {"stage": {"hits": 1, "misses": 2}})

    def test_disabled_cache_always_builds(self):
        with tempfile.TemporaryDirectory() as tmp:
            cache = ArtifactCache(tmp, enabled=False)
            for _ in range(2):
                cache.get_or_create("s", "k", ".txt", lambda: "v", lambda v, p: Path(p).write_text(v), lambda p: Path(p).read_text())
        self.assertEqual(cache.statistics()["s"], {"hits": 0, "misses": 2})

    def test_counts_under_concurrent_access(self):
        write = lambda value, path: Path(path).write_text(value)
        read = lambda path: Path(path).read_text()
        with tempfile.TemporaryDirectory() as tmp:
            cache = ArtifactCache(tmp)
            Parallel(n_jobs=8, prefer="threads")(
                delayed(cache.get_or_create)("stage", make_key(i % 50), ".txt", lambda: "v", write, read)
                for i in range(400)
            )
        self.assertEqual(cache.statistics(), {"stage": {"hits": 350, "misses": 50}})

    def test_keys_follow_content(self):
        self.assertEqual(make_key("a", {"x": 1, "y": 2}), make_key("a", {"y": 2, "x": 1}))
        self.assertNotEqual(make_key("a", 1), make_key("a", 2))
        with tempfile.TemporaryDirectory() as tmp:
            root = write_tree(Path(tmp), {"p/A.java": "class A {}"})
            before = tree_digest(root)
            (root / "p" / "A.java").write_text("class A { int x; }")
            self.assertNotEqual(before, tree_digest(root))

    def test_role_seeds_differ(self):
        self.assertNotEqual(derive_seed(5, "old"), derive_seed(5, "new"))
        self.assertEqual(derive_seed(5, "old"), derive_seed(5, "old"))


class TestExperimentRunner(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_static_only_skips_graph_stages(self):
        config = load_experiment_config(small_experiment(self.dir / "data", ["static_only"]))
        runner = ExperimentRunner(config, self.dir / "ws")
        report = runner.run()
        self.assertEqual(set(report.runs["scenario"]), {"static_only"})
        self.assertEqual(len(report.runs), 2)
        self.assertNotIn("embeddings", runner.cache.statistics())
        self.assertFalse(report.has_failures)

    def test_full_run_and_cached_rerun(self):
        path = small_experiment(self.dir / "data", ["static_only", "emb_no_align", "emb_knn_anchor", "meta"])
        config = load_experiment_config(path)
        first = ExperimentRunner(config, self.dir / "ws")
        report = first.run()
        self.assertFalse(report.has_failures)
        scenarios = set(report.runs["scenario"])
        self.assertIn("emb_knn_anchor/line2/orthogonal/N=all", scenarios)
        self.assertIn("meta", scenarios)
        self.assertTrue(report.runs["auc"].between(0, 1).all())
        self.assertEqual(len(report.summary), len(scenarios))
        self.assertEqual(set(report.comparisons["scenario_b"]), {"static_only"})
        self.assertEqual(set(report.comparisons["level"]), {"repetition"})
        self.assertGreater(first.cache.statistics()["embeddings"]["misses"], 0)

        second = ExperimentRunner(load_experiment_config(path), self.dir / "ws")
        again = second.run()
        stats = second.cache.statistics()
        for stage in ("embeddings", "anchors", "transforms", "models"):
            self.assertEqual(stats[stage]["misses"], 0, stage)
            self.assertGreater(stats[stage]["hits"], 0, stage)
        pd.testing.assert_frame_equal(report.runs, again.runs)

    def test_reports_are_byte_identical(self):
        path = small_experiment(self.dir / "data", ["static_only", "emb_gns_anchor"])
        outputs = []
        for name in ("a", "b"):
            runner = ExperimentRunner(load_experiment_config(path), self.dir / f"ws-{name}")
            ReportWriter().export(runner.run(), str(self.dir / f"report-{name}"))
            outputs.append(self.dir / f"report-{name}")
        for table in ("runs.csv", "summary.csv", "comparisons.csv", "sweep.csv"):
            self.assertEqual((outputs[0] / table).read_bytes(), (outputs[1] / table).read_bytes(), table)

    def test_failed_cells_are_collected(self):
        path = small_experiment(self.dir / "data", ["static_only"])
        config = load_experiment_config(path)
        new_csv = config.resolve(config.pairs[0].new.metrics)
        records = [ModuleRecord(r.name, r.metrics, 0) for r in make_records([f"m{i}" for i in range(10)])]
        write_records(new_csv, records)
        report = ExperimentRunner(config, self.dir / "ws").run()
        self.assertTrue(report.has_failures)
        self.assertEqual(len(report.failures), 2)
        self.assertIn("synthetic / static_only / rep 0", report.failures.loc[0, "error"])

    def test_pipeline_entry_point(self):
        config = load_experiment_config(small_experiment(self.dir / "data", ["static_only", "emb_no_align"]))
        report = pipeline(config, self.dir / "ws")
        self.assertEqual(set(report.runs["scenario"]), {"static_only", "emb_no_align/node2vec", "emb_no_align/line2"})
        self.assertEqual(set(report.stats["version"]), {"old", "new"})

    def test_each_repetition_embeds_again(self):
        path = small_experiment(self.dir / "data", ["emb_no_align"], algorithms=["node2vec"])
        config = load_experiment_config(path)
        self.assertTrue(config.evaluation.reseed_embeddings)
        runner = ExperimentRunner(config, self.dir / "ws")
        runner.run()
        # two repetitions x two versions
        self.assertEqual(runner.cache.statistics()["embeddings"]["misses"], 4)

        fixed = load_experiment_config(path)
        fixed.evaluation.reseed_embeddings = False
        runner = ExperimentRunner(fixed, self.dir / "ws-fixed")
        runner.run()
        self.assertEqual(runner.cache.statistics()["embeddings"]["misses"], 2)

    def test_deleted_artifact_rebuilds_only_its_stage(self):
        path = small_experiment(
            self.dir / "data", ["emb_knn_anchor"], algorithms=["node2vec"],
            evaluation={"repetitions": 1, "base_seed": 0},
        )
        workspace = self.dir / "ws"
        ExperimentRunner(load_experiment_config(path), workspace).run()
        stored = sorted((workspace / "artifacts" / "embeddings").glob("*.emb"))
        self.assertEqual(len(stored), 2)
        original = stored[0].read_bytes()
        stored[0].unlink()

        runner = ExperimentRunner(load_experiment_config(path), workspace)
        runner.run()
        stats = runner.cache.statistics()
        self.assertEqual(stats["embeddings"]["misses"], 1)
        self.assertGreater(stats["embeddings"]["hits"], 0)
        # same content, so the downstream keys are unchanged
        self.assertEqual(stored[0].read_bytes(), original)
        for stage in ("anchors", "transforms", "models"):
            self.assertEqual(stats[stage]["misses"], 0, stage)
            self.assertGreater(stats[stage]["hits"], 0, stage)

    def test_fatal_configuration_stops_the_run(self):
        config = parse_experiment_config({"pairs": []}, self.dir)
        with self.assertRaises(ConfigurationError):
            ExperimentRunner(config, self.dir / "ws").run()


@unittest.skipUnless(os.getenv("CVDP_SLOW_TESTS"), "set CVDP_SLOW_TESTS=1 to run the synthetic study")
class TestSyntheticStudy(unittest.TestCase):

    def test_alignment_beats_unaligned_embeddings(self):
        with tempfile.TemporaryDirectory() as tmp:
            pair = generate_version_pair(churn=0.10, seed=11)
            path = write_synthetic_experiment(pair, Path(tmp) / "data", seed=11, extra={
                "scenarios": ["emb_no_align", "emb_knn_anchor", "emb_gns_anchor", "meta"],
                "meta": {"node2vec_strategy": "knn", "line2_strategy": "gns", "anchors": "all"},
            })
            report = ExperimentRunner(load_experiment_config(path), Path(tmp) / "ws").run()
        means = report.summary.set_index("scenario")["mean_auc"]
        for algorithm in ("node2vec", "line2"):
            aligned = max(means[f"emb_knn_anchor/{algorithm}/orthogonal/N=all"],
                          means[f"emb_gns_anchor/{algorithm}/orthogonal/N=all"])
            self.assertGreaterEqual(aligned - means[f"emb_no_align/{algorithm}"], 0.05, algorithm)
        parts = max(means["emb_knn_anchor/node2vec/orthogonal/N=all"], means["emb_gns_anchor/line2/orthogonal/N=all"])
        self.assertGreaterEqual(means["meta"], parts - 0.02)


class TestCommandLine(unittest.TestCase):

    def run_cli(self, argv) -> int:
        with redirect_stdout(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(argv)
        return ctx.exception.code

    def test_synthesize_validate_and_pipeline(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            self.assertEqual(self.run_cli(["--seed", "2", "synthesize", "--out", str(tmp / "data"), "--sizes", "12", "12"]), 0)
            experiment = tmp / "data" / "experiment.yaml"
            data = yaml.safe_load(experiment.read_text())
            data.update({**SMALL, "scenarios": ["static_only", "emb_no_align"]})
            experiment.write_text(yaml.safe_dump(data))

            self.assertEqual(self.run_cli(["validate", "--config", str(experiment)]), 0)
            code = self.run_cli([
                "--workspace", str(tmp / "ws"), "--deterministic",
                "pipeline", "--config", str(experiment), "--out", str(tmp / "report"), "--export-features",
            ])
            self.assertEqual(code, 0)
            self.assertTrue((tmp / "report" / "summary.csv").exists())
            self.assertTrue((tmp / "report" / "README.md").exists())
            self.assertTrue(any((tmp / "ws" / "features").glob("*__old.csv")))

    def test_single_stage_commands(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            src = write_tree(tmp / "src", {"sample/Sample.java": SAMPLE_SOURCE})
            self.assertEqual(self.run_cli([
                "extract", "--src", str(src), "--out", str(tmp / "sample.cdn"), "--diagnostics", str(tmp / "diag.jsonl"),
            ]), 0)
            self.assertEqual(set(read_graph(tmp / "sample.cdn").edge_keys()), SAMPLE_EDGES)
            self.assertEqual((tmp / "diag.jsonl").read_text(), "")

            small_experiment(tmp / "data", ["static_only"])
            graphs = {role: tmp / "data" / f"synthetic-{role}.graph" for role in ("old", "new")}
            metrics = {role: tmp / "data" / f"synthetic-{role}.csv" for role in ("old", "new")}
            for seed, role in enumerate(("old", "new"), start=1):
                self.assertEqual(self.run_cli([
                    "--seed", str(seed), "--deterministic", "embed", "--graph", str(graphs[role]),
                    "--dim", "8", "--walks", "4", "--walk-length", "10", "--window", "3", "--out", str(tmp / f"{role}.emb"),
                ]), 0)
            old_embedding = read_embedding(tmp / "old.emb")
            self.assertEqual(old_embedding.dim, 8)

            self.assertEqual(self.run_cli([
                "align", "--old-emb", str(tmp / "old.emb"), "--new-emb", str(tmp / "new.emb"),
                "--old-graph", str(graphs["old"]), "--new-graph", str(graphs["new"]), "--strategy", "gns",
                "--out", str(tmp / "new.transform"), "--anchors-out", str(tmp / "new.anchors"),
                "--aligned-out", str(tmp / "aligned.emb"),
            ]), 0)
            self.assertEqual(read_transform(tmp / "new.transform").matrix.shape, (8, 8))
            self.assertGreater(len(read_anchors(tmp / "new.anchors")), 0)
            self.assertEqual(read_embedding(tmp / "aligned.emb").dim, 8)

            self.assertEqual(self.run_cli([
                "--seed", "4", "--deterministic", "train", "--metrics", str(metrics["old"]),
                "--embedding", str(tmp / "old.emb"), "--model", str(tmp / "forest.joblib"), "--trees", "10",
            ]), 0)
            self.assertEqual(load_model(tmp / "forest.joblib").feature_names[-1], "emb_7")

            self.assertEqual(self.run_cli([
                "predict", "--metrics", str(metrics["new"]), "--embedding", str(tmp / "new.emb"),
                "--transform", str(tmp / "new.transform"), "--model", str(tmp / "forest.joblib"),
                "--out", str(tmp / "predictions.csv"),
            ]), 0)
            predictions = pd.read_csv(tmp / "predictions.csv")
        self.assertEqual(list(predictions.columns), ["name", "probability", "prediction", "label"])
        self.assertGreater(len(predictions), 0)
        self.assertTrue(predictions["probability"].between(0, 1).all())
        self.assertTrue(set(predictions["prediction"]) <= {0, 1})

    def test_fixed_embeddings_flag(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            experiment = small_experiment(tmp / "data", ["emb_no_align"], algorithms=["node2vec"])
            for name, flags in (("reseeded", []), ("fixed", ["--fixed-embeddings"])):
                self.assertEqual(self.run_cli([
                    "--workspace", str(tmp / name), "pipeline", "--config", str(experiment), *flags,
                ]), 0)
            reseeded = list((tmp / "reseeded" / "artifacts" / "embeddings").glob("*.emb"))
            fixed = list((tmp / "fixed" / "artifacts" / "embeddings").glob("*.emb"))
        self.assertEqual((len(reseeded), len(fixed)), (4, 2))

    def test_invalid_configuration_exits_one(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "experiment.yaml"
            path.write_text(yaml.safe_dump({"pairs": []}))
            self.assertEqual(self.run_cli(["validate", "--config", str(path)]), 1)
            self.assertEqual(self.run_cli(["pipeline", "--config", str(path)]), 1)

    def test_no_command(self):
        self.assertEqual(self.run_cli([]), 1)


if __name__ == '__main__':
    unittest.main()
