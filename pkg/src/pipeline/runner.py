"""
Experiment runner - extract, embed, align, learn and evaluate every
(pair, scenario, repetition) cell of an experiment.
"""

import logging
import re
import threading
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.alignment.anchors import AnchorSet, get_anchor_scorer, select_anchors
from src.alignment.io import read_anchors, read_transform, write_anchors, write_transform
from src.alignment.procrustes import anchor_matrices, apply_transform, fit_transform
from src.datasets.features import (
    FeatureTable,
    dataset_statistics,
    export_feature_table,
    join_features,
    match_modules,
    static_table,
)
from src.datasets.metrics import ModuleRecord, load_metrics_csv
from src.embeddings.base import EmbeddingMatrix
from src.embeddings.factory import embed
from src.embeddings.io import read_embedding, write_embedding
from src.errors import ConfigurationError
from src.evaluation.scenarios import (
    EvalReport,
    Prediction,
    RunRecord,
    Scenario,
    ScenarioSpec,
    compare_scenarios,
    default_comparisons,
    expand_scenarios,
    roc_frame,
    run_repetition,
    runs_frame,
    summarize,
    sweep_table,
)
from src.graphs.io import read_graph, write_graph
from src.graphs.model import SimpleDigraph, strip
from src.learners.forest import ForestModel, load_model, oob_proba, predict_proba, save_model, train_forest
from src.learners.meta import predict_meta, train_meta
from src.pipeline.cache import ArtifactCache, make_key, tree_digest
from src.pipeline.config import ExperimentConfig, PairConfig, validate_experiment
from src.scanners.cdn_extractor import extract_project

logger = logging.getLogger(__name__)

ROLES = ("old", "new")
FAILURE_COLUMNS = ["pair", "scenario", "rep", "error"]


def derive_seed(seed: int, role: str) -> int:
    """Independent 32-bit seed per version role."""
    state = np.random.SeedSequence([seed % (2**63), ROLES.index(role)]).generate_state(1)
    return int(state[0])


def safe_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", label)


class PairPipeline:
    """All stages for one version pair, backed by the artifact cache."""

    def __init__(
        self,
        pair_id: str,
        pair: PairConfig,
        config: ExperimentConfig,
        cache: ArtifactCache,
        export_dir: Optional[Path] = None,
    ):
        self.pair_id = pair_id
        self.pair = pair
        self.config = config
        self.cache = cache
        self.export_dir = export_dir
        self._lock = threading.RLock()
        self._records: Dict[str, List[ModuleRecord]] = {}
        self._graphs: Dict[str, Tuple[SimpleDigraph, str]] = {}

    def _version(self, role: str):
        return self.pair.old if role == "old" else self.pair.new

    # -------------------- inputs --------------------

    def records(self, role: str) -> List[ModuleRecord]:
        with self._lock:
            if role not in self._records:
                version = self._version(role)
                self._records[role] = load_metrics_csv(self.config.resolve(version.metrics), version.name_column)
            return self._records[role]

    def metrics_digest(self, role: str) -> str:
        version = self._version(role)
        return make_key(self.cache.digest(self.config.resolve(version.metrics)), version.name_column)

    def graph(self, role: str) -> Tuple[SimpleDigraph, str]:
        """Stripped graph of a version and the digest of its graph file."""
        with self._lock:
            if role in self._graphs:
                return self._graphs[role]
            version = self._version(role)
            if version.graph is not None:
                path = self.config.resolve(version.graph)
                graph = strip(read_graph(path))
            else:
                src = self.config.resolve(version.src)
                logger.info(f"🔍 Extracting CDN for {self.pair_id}:{role} from {src}")
                _, path = self.cache.get_or_create(
                    "graphs",
                    make_key("graph", tree_digest(src)),
                    ".cdn",
                    build=lambda: extract_project(src, workers=self.config.workers).graph,
                    write=write_graph,
                    read=read_graph,
                )
                graph = strip(read_graph(path))
            self._graphs[role] = (graph, self.cache.digest(path))
            return self._graphs[role]

    def loaded_graph(self, role: str) -> Optional[SimpleDigraph]:
        entry = self._graphs.get(role)
        return entry[0] if entry else None

    # -------------------- embeddings and alignment --------------------

    def embedding_seed(self, seed: int) -> int:
        return seed if self.config.evaluation.reseed_embeddings else self.config.seed

    def embedding(self, role: str, algorithm: str, seed: int) -> Tuple[EmbeddingMatrix, str]:
        graph, graph_digest = self.graph(role)
        config = self.config.embedding.model_copy(
            update={"algorithm": algorithm, "seed": derive_seed(self.embedding_seed(seed), role)}
        )
        key = make_key("embedding", graph_digest, config.model_dump(exclude={"workers"}))
        embedding, path = self.cache.get_or_create(
            "embeddings",
            key,
            ".emb",
            build=lambda: embed(graph, config),
            write=write_embedding,
            read=read_embedding,
        )
        return embedding, self.cache.digest(path)

    def anchors(self, algorithm: str, strategy: str, n: Optional[int], seed: int) -> Tuple[AnchorSet, str]:
        old, old_digest = self.embedding("old", algorithm, seed)
        new, new_digest = self.embedding("new", algorithm, seed)
        g0, g0_digest = self.graph("old")
        g1, g1_digest = self.graph("new")
        alignment = self.config.alignment
        key = make_key(
            "anchors", old_digest, new_digest, g0_digest, g1_digest, strategy, n,
            alignment.k, alignment.knn_metric, seed if strategy == "random" else None,
        )

        def build() -> AnchorSet:
            scorer = get_anchor_scorer(
                strategy, old, new, g0, g1, k=alignment.k, metric=alignment.knn_metric, seed=seed
            )
            return select_anchors(match_modules(old.node_ids, new.node_ids), scorer, n, dim=old.dim)

        anchors, path = self.cache.get_or_create("anchors", key, ".anchors", build, write_anchors, read_anchors)
        return anchors, self.cache.digest(path)

    def aligned_embedding(self, algorithm: str, strategy: str, method: str, n: Optional[int], seed: int) -> Tuple[EmbeddingMatrix, str]:
        """The new version's embedding mapped into the old version's space."""
        old, old_digest = self.embedding("old", algorithm, seed)
        new, new_digest = self.embedding("new", algorithm, seed)
        anchors, anchors_digest = self.anchors(algorithm, strategy, n, seed)
        transform, path = self.cache.get_or_create(
            "transforms",
            make_key("transform", anchors_digest, old_digest, new_digest, method),
            ".transform",
            build=lambda: fit_transform(method, *anchor_matrices(anchors, old, new)),
            write=write_transform,
            read=read_transform,
        )
        return apply_transform(transform, new), self.cache.digest(path)

    # -------------------- features and models --------------------

    def tables(self, spec: ScenarioSpec, seed: int) -> Tuple[FeatureTable, FeatureTable, str]:
        """(training table, test table, training-table key) for a scenario variant."""
        if spec.scenario is Scenario.STATIC_ONLY:
            return static_table(self.records("old")), static_table(self.records("new")), make_key("static", self.metrics_digest("old"))

        algorithm = spec.algorithm
        old, old_digest = self.embedding("old", algorithm, seed)
        if spec.scenario is Scenario.EMB_NO_ALIGN:
            new, _ = self.embedding("new", algorithm, seed)
        else:
            new, _ = self.aligned_embedding(algorithm, spec.scenario.anchor_strategy, spec.method, spec.anchors, seed)
        train = join_features(self.records("old"), old)
        test = join_features(self.records("new"), new)
        return train, test, make_key("joined", self.metrics_digest("old"), old_digest)

    def forest(self, table: FeatureTable, table_key: str, seed: int) -> ForestModel:
        learner = self.config.learner
        model, _ = self.cache.get_or_create(
            "models",
            make_key("model", table_key, learner.model_dump(exclude={"workers", "seed"}), seed),
            ".joblib",
            build=lambda: train_forest(table, learner, seed),
            write=save_model,
            read=load_model,
        )
        return model

    def predict(self, spec: ScenarioSpec, seed: int) -> Prediction:
        if spec.scenario is Scenario.META:
            return self._predict_meta(seed)
        train, test, key = self.tables(spec, seed)
        self._export(spec, seed, train, test)
        model = self.forest(train, key, seed)
        return Prediction(test.names, predict_proba(model, test), test.labels)

    def _predict_meta(self, seed: int) -> Prediction:
        meta = self.config.meta
        anchors = None if meta.anchors == "all" else int(meta.anchors)
        parts = {}
        for algorithm, strategy in (("line2", meta.line2_strategy), ("node2vec", meta.node2vec_strategy)):
            scenario = Scenario(f"emb_{strategy}_anchor")
            spec = ScenarioSpec(scenario, algorithm, meta.method, anchors)
            train, test, key = self.tables(spec, seed)
            model = self.forest(train, key, seed)
            parts[algorithm] = (
                dict(zip(train.names, oob_proba(model, train))),
                dict(zip(test.names, predict_proba(model, test))),
                dict(zip(train.names, train.labels)),
                dict(zip(test.names, test.labels)),
            )

        line, n2v = parts["line2"], parts["node2vec"]
        train_names = sorted(set(line[0]) & set(n2v[0]))
        test_names = sorted(set(line[1]) & set(n2v[1]))
        model = train_meta(
            [line[0][n] for n in train_names],
            [n2v[0][n] for n in train_names],
            [line[2][n] for n in train_names],
        )
        probabilities = predict_meta(model, [line[1][n] for n in test_names], [n2v[1][n] for n in test_names])
        labels = np.array([line[3][n] for n in test_names], dtype=np.int64)
        details = {"w0": float(model.weights[0]), "w_line2": float(model.weights[1]), "w_node2vec": float(model.weights[2])}
        return Prediction(tuple(test_names), probabilities, labels, details)

    def _export(self, spec: ScenarioSpec, seed: int, train: FeatureTable, test: FeatureTable):
        if self.export_dir is None or seed != self.config.evaluation.base_seed:
            return
        stem = f"{self.pair_id}__{safe_name(spec.label)}"
        export_feature_table(train, self.export_dir / f"{stem}__old.csv")
        export_feature_table(test, self.export_dir / f"{stem}__new.csv")


class ExperimentRunner:
    """Runs every cell of an experiment and aggregates the report."""

    def __init__(
        self,
        config: ExperimentConfig,
        workspace: Union[str, Path],
        workers: int = 1,
        use_cache: bool = True,
        export_features: bool = False,
    ):
        self.config = config
        self.workspace = Path(workspace)
        self.workers = max(1, workers)
        self.cache = ArtifactCache(self.workspace / "artifacts", enabled=use_cache)
        self.export_dir = self.workspace / "features" if export_features else None

    def run(self) -> EvalReport:
        diagnostics = validate_experiment(self.config)
        fatal = [d for d in diagnostics if d.is_fatal]
        if fatal:
            raise ConfigurationError(f"experiment configuration has {len(fatal)} fatal problems", diagnostics)

        config = self.config
        specs = expand_scenarios(
            config.scenarios,
            config.algorithms,
            config.alignment.method,
            config.alignment.anchor_counts(config.embedding.dim),
        )
        pipelines = {
            pair_id: PairPipeline(pair_id, pair, config, self.cache, self.export_dir)
            for pair_id, pair in zip(config.pair_ids(), config.pairs)
        }
        evaluation = config.evaluation
        cells = [
            (pair_id, spec, rep)
            for pair_id in pipelines
            for spec in specs
            for rep in range(evaluation.repetitions)
        ]
        logger.info(f"🧪 Running {len(cells)} cells: {len(pipelines)} pairs x {len(specs)} scenarios x {evaluation.repetitions} repetitions")

        if self.workers > 1:
            results = Parallel(n_jobs=self.workers, prefer="threads")(
                delayed(self._run_cell)(pipelines[p], spec, rep) for p, spec, rep in cells
            )
        else:
            results = [self._run_cell(pipelines[p], spec, rep) for p, spec, rep in cells]

        records: List[RunRecord] = []
        failures = []
        roc = {}
        for (pair_id, spec, rep), (record, curve, failure) in zip(cells, results):
            if failure is not None:
                failures.append(failure)
                continue
            records.append(record)
            if curve is not None:
                roc[(pair_id, spec.label)] = curve

        runs = runs_frame(records)
        comparisons = evaluation.comparisons
        if comparisons is None:
            comparisons = default_comparisons(runs["scenario"].unique() if not runs.empty else [])
        report = EvalReport(
            runs=runs,
            summary=summarize(runs),
            comparisons=compare_scenarios(runs, [tuple(c) for c in comparisons]),
            sweep=sweep_table(runs),
            failures=pd.DataFrame(failures, columns=FAILURE_COLUMNS),
            stats=self._statistics(pipelines),
            roc=roc,
        )
        logger.info(f"✅ {len(records)} cells succeeded, {len(failures)} failed")
        for stage, counts in self.cache.statistics().items():
            logger.info(f"   cache {stage}: {counts['hits']} hits, {counts['misses']} misses")
        return report

    def _run_cell(self, pipeline: PairPipeline, spec: ScenarioSpec, rep: int):
        evaluation = self.config.evaluation
        seed = evaluation.base_seed + rep
        try:
            record, prediction = run_repetition(pipeline, spec, rep, seed, evaluation.threshold)
        except Exception as e:
            logger.error(f"❌ {e}")
            return None, None, {"pair": pipeline.pair_id, "scenario": spec.label, "rep": rep, "error": str(e)}
        curve = roc_frame(prediction) if evaluation.roc and rep == 0 else None
        logger.debug(f"   {pipeline.pair_id} {spec.label} rep {rep}: AUC {record.auc:.4f} F1 {record.f1:.4f}")
        return record, curve, None

    def _statistics(self, pipelines: Dict[str, PairPipeline]) -> pd.DataFrame:
        rows = []
        for pair_id, pipeline in pipelines.items():
            for role in ROLES:
                try:
                    records = pipeline.records(role)
                except Exception as e:
                    logger.warning(f"No statistics for {pair_id}:{role}: {e}")
                    continue
                row = dataset_statistics(role, records, pipeline.loaded_graph(role))
                rows.append({"pair": pair_id, **row})
        return pd.DataFrame(rows)


def pipeline(
    config: ExperimentConfig,
    workspace: Union[str, Path],
    workers: int = 1,
    use_cache: bool = True,
    export_features: bool = False,
) -> EvalReport:
    """Run an experiment end to end."""
    return ExperimentRunner(config, workspace, workers, use_cache, export_features).run()
