"""
Synthetic version pairs for demos and end-to-end checks.

The old version is a directed planted-partition graph. The new version drops
and adds a fraction of the modules and resamples a few edges. A module's
defect probability depends on its community and on one static metric (wmc),
so both the graph structure and the metrics carry signal.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import yaml

from src.datasets.metrics import METRIC_COLUMNS, ModuleRecord, write_metrics_csv
from src.graphs.io import write_graph
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)


@dataclass
class SyntheticVersion:
    graph: SimpleDigraph
    records: List[ModuleRecord]
    communities: Dict[str, int]


@dataclass
class SyntheticPair:
    old: SyntheticVersion
    new: SyntheticVersion


def _module_name(package: str, community: int, serial: int) -> str:
    return f"{package}.c{community}.Module{serial:04d}"


def _records(
    rng: np.random.Generator,
    names: Sequence[str],
    communities: Dict[str, int],
    latent: Dict[str, float],
    community_effect: float,
    metric_effect: float,
) -> List[ModuleRecord]:
    blocks = max(communities.values()) + 1
    records = []
    for name in names:
        z = latent[name]
        metrics = rng.lognormal(mean=1.0, sigma=0.6, size=len(METRIC_COLUMNS))
        metrics[0] = np.round(np.exp(1.5 + 0.5 * z), 3)  # wmc
        metrics[METRIC_COLUMNS.index("loc")] = np.round(metrics[-1] * 40.0)
        side = 2.0 * communities[name] / max(blocks - 1, 1) - 1.0
        logit = community_effect * side + metric_effect * z
        defective = rng.random() < 1.0 / (1.0 + np.exp(-logit))
        bugs = int(defective) * (1 + int(rng.poisson(0.5)))
        records.append(ModuleRecord(name=name, metrics=tuple(float(v) for v in metrics), bug_count=bugs))
    return records


def generate_version_pair(
    community_sizes: Sequence[int] = (60, 60),
    p_in: float = 0.15,
    p_out: float = 0.01,
    churn: float = 0.10,
    edge_noise: float = 0.05,
    community_effect: float = 1.6,
    metric_effect: float = 1.0,
    seed: int = 0,
    package: str = "org.synth",
) -> SyntheticPair:
    """
    Build an (old, new) version pair.

    Args:
        community_sizes: Module count per community in the old version
        p_in: Edge probability inside a community
        p_out: Edge probability across communities
        churn: Fraction of modules replaced in the new version (half removed, half added)
        edge_noise: Fraction of ordered pairs among surviving modules that are resampled
        community_effect: Log-odds contribution of the community
        metric_effect: Log-odds contribution of the standardized wmc driver
        seed: Random seed

    Returns:
        SyntheticPair
    """
    rng = np.random.default_rng(seed)
    blocks = len(community_sizes)
    probs = [[p_in if a == b else p_out for b in range(blocks)] for a in range(blocks)]
    sbm = nx.stochastic_block_model(list(community_sizes), probs, directed=True, seed=int(rng.integers(2**31)))

    communities: Dict[str, int] = {}
    ids: Dict[int, str] = {}
    for node, data in sbm.nodes(data=True):
        name = _module_name(package, data["block"], node)
        ids[node] = name
        communities[name] = data["block"]
    old_edges = [(ids[u], ids[v]) for u, v in sbm.edges()]
    latent = {name: float(rng.standard_normal()) for name in sorted(communities)}

    old_names = sorted(communities)
    old = SyntheticVersion(
        graph=SimpleDigraph.from_edges(old_names, old_edges),
        records=_records(rng, old_names, communities, latent, community_effect, metric_effect),
        communities=dict(communities),
    )

    # churn
    half = int(round(churn * len(old_names) / 2))
    removed = set(rng.choice(old_names, size=half, replace=False).tolist()) if half else set()
    survivors = [n for n in old_names if n not in removed]
    new_communities = {n: communities[n] for n in survivors}
    serial = len(old_names)
    for _ in range(half):
        block = int(rng.integers(blocks))
        name = _module_name(package, block, serial)
        serial += 1
        new_communities[name] = block
        latent[name] = float(rng.standard_normal())
    added = [n for n in new_communities if n not in communities]

    kept = {(u, v) for u, v in old_edges if u not in removed and v not in removed}
    new_edges = set()
    for u in survivors:
        for v in survivors:
            if u == v:
                continue
            if rng.random() < edge_noise:
                if rng.random() < probs[new_communities[u]][new_communities[v]]:
                    new_edges.add((u, v))
            elif (u, v) in kept:
                new_edges.add((u, v))
    everyone = sorted(new_communities)
    for u in added:
        for v in everyone:
            if u == v:
                continue
            p = probs[new_communities[u]][new_communities[v]]
            if rng.random() < p:
                new_edges.add((u, v))
            if rng.random() < p:
                new_edges.add((v, u))

    new = SyntheticVersion(
        graph=SimpleDigraph.from_edges(everyone, sorted(new_edges)),
        records=_records(rng, everyone, new_communities, latent, community_effect, metric_effect),
        communities=new_communities,
    )
    logger.info(
        f"Synthetic pair: {len(old.graph)} -> {len(new.graph)} modules, "
        f"{old.graph.edge_count} -> {new.graph.edge_count} edges, {half} removed / {half} added"
    )
    return SyntheticPair(old=old, new=new)


def write_synthetic_experiment(
    pair: SyntheticPair,
    out_dir: Union[str, Path],
    pair_id: str = "synthetic",
    seed: int = 0,
    extra: Dict = None,
) -> Path:
    """
    Write graph files, metric CSVs and a ready-to-run experiment file.

    Returns:
        Path of the experiment YAML
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: Dict[str, Tuple[str, str]] = {}
    for role, version in (("old", pair.old), ("new", pair.new)):
        graph_file, metrics_file = f"{pair_id}-{role}.graph", f"{pair_id}-{role}.csv"
        write_graph(version.graph, out_dir / graph_file)
        write_metrics_csv(version.records, out_dir / metrics_file)
        files[role] = (graph_file, metrics_file)

    experiment = {
        "seed": seed,
        "pairs": [
            {
                "id": pair_id,
                "old": {"graph": files["old"][0], "metrics": files["old"][1]},
                "new": {"graph": files["new"][0], "metrics": files["new"][1]},
            }
        ],
        "embedding": {"dim": 16, "node2vec": {"walks_per_node": 10, "walk_length": 40}},
        "alignment": {"anchors": ["all"], "k": 10, "method": ["orthogonal"]},
        "learner": {"n_trees": 50},
        "evaluation": {"repetitions": 10, "base_seed": seed},
        "scenarios": ["static_only", "emb_no_align", "emb_random_anchor", "emb_knn_anchor", "emb_gns_anchor", "meta"],
    }
    if extra:
        experiment.update(extra)
    path = out_dir / "experiment.yaml"
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(experiment, f, sort_keys=False)
    logger.info(f"📦 Synthetic experiment written to {path}")
    return path
