"""
Feature tables: static metrics joined with (aligned) embedding vectors.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from src.datasets.metrics import METRIC_COLUMNS, ModuleRecord, normalize_name
from src.embeddings.base import EmbeddingMatrix
from src.errors import DatasetError
from src.graphs.model import graph_statistics, strip

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    names: Tuple[str, ...]
    features: np.ndarray  # rows x F
    labels: np.ndarray  # 0/1 per row
    feature_names: Tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64).reshape(len(self.names), len(self.feature_names))
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.names),):
            raise DatasetError(f"expected {len(self.names)} labels, got {labels.shape[0]}")
        if not np.all(np.isfinite(features)):
            raise DatasetError("feature table contains missing or non-finite values")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def width(self) -> int:
        return len(self.feature_names)

    @property
    def defect_rate(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.features, columns=list(self.feature_names))
        frame.insert(0, "label", self.labels)
        frame.insert(0, "name", list(self.names))
        return frame


def _unique_records(records: Iterable[ModuleRecord]) -> Dict[str, ModuleRecord]:
    unique: Dict[str, ModuleRecord] = {}
    for record in records:
        key = normalize_name(record.name)
        if key in unique:
            logger.warning(f"Duplicate metrics row for {key}; keeping the first")
            continue
        unique[key] = record
    return unique


def static_table(records: Iterable[ModuleRecord]) -> FeatureTable:
    """The 20 static metrics only."""
    unique = _unique_records(records)
    names = sorted(unique)
    return FeatureTable(
        names=tuple(names),
        features=np.array([unique[n].metrics for n in names], dtype=np.float64).reshape(len(names), len(METRIC_COLUMNS)),
        labels=np.array([unique[n].label for n in names], dtype=np.int64),
        feature_names=METRIC_COLUMNS,
    )


def join_features(records: Iterable[ModuleRecord], embedding: EmbeddingMatrix, prefix: str = "emb") -> FeatureTable:
    """
    Inner join of metric records and embedding vectors on the normalized module name.

    Returns:
        FeatureTable with 20 metric columns followed by d embedding columns
    """
    unique = _unique_records(records)
    vectors = {normalize_name(name): i for i, name in enumerate(embedding.node_ids)}
    names = sorted(set(unique) & set(vectors))

    dropped_records = len(unique) - len(names)
    dropped_vectors = len(vectors) - len(names)
    logger.info(
        f"Joined {len(names)} modules; dropped {dropped_records} without embedding and {dropped_vectors} without metrics"
    )
    if not names:
        raise DatasetError("no joinable modules")

    static = np.array([unique[n].metrics for n in names], dtype=np.float64)
    embedded = embedding.vectors[[vectors[n] for n in names]]
    return FeatureTable(
        names=tuple(names),
        features=np.hstack([static, embedded]),
        labels=np.array([unique[n].label for n in names], dtype=np.int64),
        feature_names=METRIC_COLUMNS + tuple(f"{prefix}_{i}" for i in range(embedding.dim)),
    )


def match_modules(names0: Iterable[str], names1: Iterable[str]) -> Set[str]:
    """Modules present in both versions, compared after name normalization."""
    return {normalize_name(n) for n in names0} & {normalize_name(n) for n in names1}


def export_feature_table(table: FeatureTable, path: Union[str, Path]):
    """CSV with ``name,label,<feature columns>``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame().to_csv(path, index=False)


def dataset_statistics(
    version: str,
    records: Sequence[ModuleRecord],
    graph=None,
    embedding: Optional[EmbeddingMatrix] = None,
) -> Dict[str, Union[str, int, float]]:
    """One row of the dataset summary: graph size, metric coverage and defect rate."""
    row: Dict[str, Union[str, int, float]] = {"version": version, "modules": len(records)}
    defective = sum(r.label for r in records)
    row["defective"] = defective
    row["defect_pct"] = round(100.0 * defective / len(records), 2) if records else 0.0
    if graph is not None:
        stats = graph_statistics(strip(graph))
        row["cdn_nodes"] = stats["nodes"]
        row["cdn_edges"] = stats["edges"]
        names = {normalize_name(r.name) for r in records}
        row["nodes_with_metrics"] = len(names & {normalize_name(n) for n in strip(graph).nodes})
    if embedding is not None:
        row["joined"] = len(match_modules((r.name for r in records), embedding.node_ids))
    return row
