#!/usr/bin/env python3
"""
CDN Defect Aligner - CLI Entry Point
Cross-version defect prediction with aligned class-dependency-network embeddings.
"""

import os
import sys
import argparse
import logging
from pathlib import Path
from typing import Optional

import pandas as pd
from dotenv import load_dotenv

from src.alignment.anchors import KNN_METRICS, STRATEGIES, get_anchor_scorer, select_anchors
from src.alignment.io import read_transform, write_anchors, write_transform
from src.alignment.procrustes import METHODS, align_embeddings, apply_transform
from src.datasets.features import join_features, match_modules, static_table
from src.datasets.metrics import load_metrics_csv
from src.datasets.synthetic import generate_version_pair, write_synthetic_experiment
from src.embeddings.base import EmbedConfig, Line2Params, Node2VecParams
from src.embeddings.factory import EMBEDDERS, embed
from src.embeddings.io import read_embedding, write_embedding
from src.errors import ConfigurationError
from src.evaluation.metrics import auc, f1, threshold_predictions
from src.graphs.io import read_graph, write_graph
from src.graphs.model import graph_statistics, strip
from src.learners.forest import ForestConfig, load_model, predict_proba, save_model, train_forest
from src.outputs.report import ReportWriter
from src.pipeline.config import check_experiment_file, load_experiment_config
from src.pipeline.runner import ExperimentRunner
from src.scanners.cdn_extractor import extract_project, write_diagnostics

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=os.getenv("CVDP_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _anchor_count(value: str) -> Optional[int]:
    if value == "all":
        return None
    count = int(value)
    if count < 1:
        raise argparse.ArgumentTypeError("anchor count must be at least 1 or 'all'")
    return count


def _seed(args, default: int = 0) -> int:
    return default if args.seed is None else args.seed


# -------------------- single-stage commands --------------------

def cmd_extract(args) -> int:
    logger.info(f"🔍 Extracting CDN from {args.src}")
    result = extract_project(args.src, workers=_workers(args))
    write_graph(result.graph, args.out)
    if args.diagnostics:
        write_diagnostics(result.diagnostics, args.diagnostics)
    stats = graph_statistics(result.graph)
    logger.info(f"📦 Wrote {args.out}: {stats['nodes']} types, {stats['edges']} typed edges, {len(result.diagnostics)} diagnostics")
    return EXIT_OK


def cmd_embed(args) -> int:
    config = EmbedConfig(
        algorithm=args.algo,
        dim=args.dim,
        seed=_seed(args),
        workers=1 if args.deterministic else _workers(args),
        node2vec=Node2VecParams(
            p=args.p, q=args.q, walks_per_node=args.walks, walk_length=args.walk_length,
            window=args.window, negatives=args.negatives, epochs=args.epochs,
        ),
        line2=Line2Params(negatives=args.negatives, sample_count=args.samples),
    )
    embedding = embed(read_graph(args.graph), config)
    write_embedding(embedding, args.out)
    logger.info(f"📦 Wrote {len(embedding)} {args.dim}-dimensional vectors to {args.out}")
    return EXIT_OK


def cmd_align(args) -> int:
    old = read_embedding(args.old_emb)
    new = read_embedding(args.new_emb)
    g0 = strip(read_graph(args.old_graph)) if args.old_graph else None
    g1 = strip(read_graph(args.new_graph)) if args.new_graph else None
    scorer = get_anchor_scorer(args.strategy, old, new, g0, g1, k=args.k, metric=args.metric, seed=_seed(args))
    anchors = select_anchors(match_modules(old.node_ids, new.node_ids), scorer, args.n, dim=old.dim)
    aligned, transform = align_embeddings(anchors, old, new, args.method)
    write_transform(transform, args.out)
    if args.anchors_out:
        write_anchors(anchors, args.anchors_out)
    if args.aligned_out:
        write_embedding(aligned, args.aligned_out)
    logger.info(f"📦 {args.method} transform from {len(anchors)} {args.strategy} anchors written to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    records = load_metrics_csv(args.metrics, args.name_column)
    table = join_features(records, read_embedding(args.embedding)) if args.embedding else static_table(records)
    config = ForestConfig(
        n_trees=args.trees,
        max_features=args.max_features,
        min_samples_leaf=args.min_samples_leaf,
        max_depth=args.max_depth,
        seed=_seed(args),
        workers=1 if args.deterministic else _workers(args),
    )
    model = train_forest(table, config)
    save_model(model, args.model)
    logger.info(f"📦 Trained {config.n_trees} trees on {len(table)} modules ({table.width} features) -> {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    records = load_metrics_csv(args.metrics, args.name_column)
    if args.embedding:
        embedding = read_embedding(args.embedding)
        if args.transform:
            embedding = apply_transform(read_transform(args.transform), embedding)
        table = join_features(records, embedding)
    else:
        table = static_table(records)

    probabilities = predict_proba(model, table)
    predictions = threshold_predictions(probabilities, args.threshold)
    frame = pd.DataFrame({"name": table.names, "probability": probabilities, "prediction": predictions, "label": table.labels})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format="%.10g", lineterminator="\n")
    logger.info(f"📦 Wrote {len(frame)} predictions to {out}")
    if len(set(table.labels.tolist())) == 2:
        print(f"AUC: {auc(probabilities, table.labels):.4f}")
    print(f"F1:  {f1(predictions, table.labels):.4f}")
    return EXIT_OK


# -------------------- experiment commands --------------------

def _workers(args, config_workers: int = 1) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.getenv("CVDP_WORKERS")
    return max(1, int(env)) if env else config_workers


def _workspace(args, config) -> Path:
    if args.workspace:
        return Path(args.workspace)
    if config is not None and config.workspace:
        return config.resolve(config.workspace)
    return Path(os.getenv("CVDP_WORKSPACE", ".cvdp"))


def _run_experiment(args, out: Optional[str], export_features: bool = False, use_cache: bool = True) -> int:
    config = load_experiment_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.evaluation.base_seed = args.seed
    workers = _workers(args, config.workers)
    if args.deterministic:
        config.embedding.workers = 1
        config.learner.workers = 1
    if args.fixed_embeddings:
        config.evaluation.reseed_embeddings = False
    workspace = _workspace(args, config)

    logger.info(f"📝 Experiment {args.config} (workspace {workspace}, {workers} workers)")
    runner = ExperimentRunner(config, workspace, workers=workers, use_cache=use_cache, export_features=export_features)
    report = runner.run()

    out_dir = Path(out) if out else workspace / "reports"
    logger.info(f"📦 Writing report to {out_dir}...")
    ReportWriter().export(report, str(out_dir), runner.cache.statistics())

    print(f"\n{'='*50}")
    for row in report.summary.itertuples(index=False):
        print(f"{row.pair:<16} {row.scenario:<44} AUC {row.mean_auc:.4f}  F1 {row.mean_f1:.4f}")
    print(f"Report: {out_dir}")
    if report.has_failures:
        print(f"Failed cells: {len(report.failures)} (see failures.csv)")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_evaluate(args) -> int:
    return _run_experiment(args, args.out)


def cmd_pipeline(args) -> int:
    return _run_experiment(args, args.out, export_features=args.export_features, use_cache=not args.no_cache)


def cmd_validate(args) -> int:
    _, diagnostics = check_experiment_file(args.config)
    for diagnostic in diagnostics:
        print(diagnostic)
    fatal = sum(1 for d in diagnostics if d.is_fatal)
    print(f"{len(diagnostics)} diagnostics, {fatal} fatal")
    return EXIT_FATAL if fatal else EXIT_OK


def cmd_synthesize(args) -> int:
    pair = generate_version_pair(
        community_sizes=tuple(args.sizes),
        p_in=args.p_in,
        p_out=args.p_out,
        churn=args.churn,
        seed=_seed(args),
    )
    path = write_synthetic_experiment(pair, args.out, seed=_seed(args))
    print(f"Experiment: {path}")
    print(f"Run it with: cvdp pipeline --config {path}")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "embed": cmd_embed,
    "align": cmd_align,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
    "validate": cmd_validate,
    "synthesize": cmd_synthesize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvdp",
        description="CDN Defect Aligner - cross-version defect prediction with aligned graph embeddings",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  cvdp extract --src ./ant-1.6/src --out ant-1.6.cdn
  cvdp embed --graph ant-1.6.cdn --algo node2vec --dim 32 --seed 7 --out ant-1.6.emb
  cvdp align --old-emb a.emb --new-emb b.emb --strategy knn --n 64 --out b-to-a.transform
  cvdp --workers 4 pipeline --config config/experiment.yaml
  cvdp validate --config config/experiment.yaml
        """
    )

    # Global options
    parser.add_argument("--workspace", help="Artifact and report directory (default: $CVDP_WORKSPACE or .cvdp)")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--workers", type=int, help="Worker count (default: $CVDP_WORKERS or 1)")
    parser.add_argument("--deterministic", action="store_true", help="Single-threaded training for bit-identical results")
    parser.add_argument("--verbose", "-v", action="store_true", help="Verbose output")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("extract", help="Build the CDN of a Java source tree")
    p.add_argument("--src", required=True, help="Source directory")
    p.add_argument("--out", required=True, help="Graph file to write")
    p.add_argument("--diagnostics", help="JSON-lines diagnostics file")

    p = sub.add_parser("embed", help="Embed a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--algo", choices=sorted(EMBEDDERS), default="node2vec")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, default=1.0, help="node2vec return parameter")
    p.add_argument("--q", type=float, default=1.0, help="node2vec in-out parameter")
    p.add_argument("--walks", type=int, default=10, help="Walks per node")
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--samples", type=int, help="LINE edge samples (default 100 x |E|)")

    p = sub.add_parser("align", help="Select anchors and fit a new-to-old transform")
    p.add_argument("--old-emb", required=True)
    p.add_argument("--new-emb", required=True)
    p.add_argument("--old-graph", help="Required for gns anchors")
    p.add_argument("--new-graph", help="Required for gns anchors")
    p.add_argument("--strategy", choices=STRATEGIES, default="knn")
    p.add_argument("--n", type=_anchor_count, default=None, help="Anchor count or 'all' (default all)")
    p.add_argument("--k", type=int, default=10, help="Neighbors for knn anchors")
    p.add_argument("--metric", choices=KNN_METRICS, default="euclidean")
    p.add_argument("--method", choices=METHODS, default="orthogonal")
    p.add_argument("--out", required=True, help="Transform file to write")
    p.add_argument("--anchors-out", help="Anchor file to write")
    p.add_argument("--aligned-out", help="Aligned new-version embedding to write")

    for name, help_text in (("train", "Train a forest on one version"), ("predict", "Predict defect probabilities")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--metrics", required=True, help="PROMISE metrics CSV")
        p.add_argument("--embedding", help="Embedding file (static metrics only when omitted)")
        p.add_argument("--name-column", default="name")
        p.add_argument("--model", required=True, help="Model file")
        if name == "train":
            p.add_argument("--trees", type=int, default=100)
            p.add_argument("--max-features", type=int)
            p.add_argument("--min-samples-leaf", type=int, default=1)
            p.add_argument("--max-depth", type=int)
        else:
            p.add_argument("--transform", help="Transform to apply to the embedding first")
            p.add_argument("--threshold", type=float, default=0.5)
            p.add_argument("--out", required=True, help="Predictions CSV")

    p = sub.add_parser("evaluate", help="Run the repetition protocol of an experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="Report directory")
    p.add_argument("--fixed-embeddings", action="store_true", help="Embed once with the experiment seed instead of per repetition")

    p = sub.add_parser("pipeline", help="Validate and run a whole experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="Report directory (default <workspace>/reports)")
    p.add_argument("--export-features", action="store_true", help="Write repetition-0 feature tables")
    p.add_argument("--no-cache", action="store_true", help="Recompute every stage")
    p.add_argument("--fixed-embeddings", action="store_true", help="Embed once with the experiment seed instead of per repetition")

    p = sub.add_parser("validate", help="Check an experiment file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("synthesize", help="Write a synthetic version pair and experiment")
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", type=int, nargs="+", default=[60, 60], help="Community sizes")
    p.add_argument("--p-in", type=float, default=0.15)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--churn", type=float, default=0.10)

    return parser


def main(argv=None):
    """CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_FATAL)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        code = COMMANDS[args.command](args)
    except ConfigurationError as e:
        logger.error(f"Error: {e}")
        for diagnostic in e.diagnostics:
            print(diagnostic)
        sys.exit(EXIT_FATAL)
    except Exception as e:
        logger.error(f"Error: {e}")
        sys.exit(EXIT_FATAL)
    sys.exit(code)


if __name__ == "__main__":
    main()
