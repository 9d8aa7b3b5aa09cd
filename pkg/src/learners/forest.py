"""
Random forest over sklearn decision trees.

Bootstrap samples are drawn here, one generator per tree spawned from the
forest seed, so every tree's sample is reproducible and out-of-bag rows are
known for the meta-model.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import joblib
import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, Field
from sklearn.tree import DecisionTreeClassifier

from src.datasets.features import FeatureTable
from src.errors import LearnerError

logger = logging.getLogger(__name__)

MODEL_FORMAT = "forest v1"


class ForestConfig(BaseModel):
    n_trees: int = Field(100, ge=1)
    max_features: Optional[int] = Field(None, ge=1)  # None -> ceil(sqrt(F))
    min_samples_leaf: int = Field(1, ge=1)
    max_depth: Optional[int] = Field(None, ge=1)
    seed: int = 0
    workers: int = Field(1, ge=1)


@dataclass
class ForestModel:
    trees: List[DecisionTreeClassifier]
    feature_names: Tuple[str, ...]
    bootstraps: List[np.ndarray]  # row indices drawn for each tree
    n_rows: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def width(self) -> int:
        return len(self.feature_names)


def _positive_fraction(tree: DecisionTreeClassifier, X: np.ndarray) -> np.ndarray:
    classes = list(tree.classes_)
    if 1 not in classes:
        return np.zeros(len(X))
    return tree.predict_proba(X)[:, classes.index(1)]


def _fit_tree(X, y, child: np.random.SeedSequence, config: ForestConfig, max_features: int):
    rng = np.random.default_rng(child)
    sample = rng.integers(0, len(X), size=len(X))
    tree = DecisionTreeClassifier(
        criterion="gini",
        max_features=max_features,
        min_samples_leaf=config.min_samples_leaf,
        max_depth=config.max_depth,
        random_state=int(rng.integers(2**31 - 1)),
    )
    tree.fit(X[sample], y[sample])
    return tree, sample


def train_forest(table: FeatureTable, config: ForestConfig, seed: Optional[int] = None) -> ForestModel:
    """
    Train a forest on a feature table.

    Args:
        table: Training rows (both classes present)
        config: Forest hyperparameters
        seed: Overrides ``config.seed``

    Returns:
        ForestModel
    """
    if len(table) < 2:
        raise LearnerError(f"need at least 2 training rows, got {len(table)}")
    if len(np.unique(table.labels)) < 2:
        raise LearnerError("degenerate labels")

    seed = config.seed if seed is None else seed
    width = table.width
    max_features = config.max_features or math.ceil(math.sqrt(width))
    if max_features > width:
        raise LearnerError(f"max_features={max_features} exceeds the {width} available features")

    children = np.random.SeedSequence(seed).spawn(config.n_trees)
    X, y = table.features, table.labels
    if config.workers > 1:
        fitted = Parallel(n_jobs=config.workers, prefer="threads")(
            delayed(_fit_tree)(X, y, child, config, max_features) for child in children
        )
    else:
        fitted = [_fit_tree(X, y, child, config, max_features) for child in children]

    logger.debug(f"Trained {config.n_trees} trees on {len(table)} rows x {width} features")
    return ForestModel(
        trees=[tree for tree, _ in fitted],
        feature_names=table.feature_names,
        bootstraps=[sample for _, sample in fitted],
        n_rows=len(table),
        metadata={"seed": seed, "config": config.model_dump(), "max_features": max_features},
    )


def _as_rows(model: ForestModel, rows) -> np.ndarray:
    X = rows.features if isinstance(rows, FeatureTable) else np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.width:
        raise LearnerError(f"expected rows of width {model.width}, got shape {X.shape}")
    return X


def predict_proba(model: ForestModel, rows) -> np.ndarray:
    """Mean over trees of the leaf's defective fraction."""
    X = _as_rows(model, rows)
    return np.mean([_positive_fraction(tree, X) for tree in model.trees], axis=0)


def oob_proba(model: ForestModel, table: FeatureTable) -> np.ndarray:
    """
    Out-of-bag probabilities for the training rows.

    Rows drawn into every bootstrap sample fall back to the full-forest probability.
    """
    if len(table) != model.n_rows:
        raise LearnerError(f"model was trained on {model.n_rows} rows, table has {len(table)}")
    X = _as_rows(model, table)
    totals = np.zeros(len(X))
    counts = np.zeros(len(X))
    for tree, sample in zip(model.trees, model.bootstraps):
        out = np.ones(len(X), dtype=bool)
        out[sample] = False
        if out.any():
            totals[out] += _positive_fraction(tree, X[out])
            counts[out] += 1
    result = predict_proba(model, X)
    covered = counts > 0
    result[covered] = totals[covered] / counts[covered]
    if not covered.all():
        logger.debug(f"{int((~covered).sum())} rows were in every bootstrap sample")
    return result


def save_model(model: ForestModel, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump({"format": MODEL_FORMAT, "model": model}, path)


def load_model(path: Union[str, Path]) -> ForestModel:
    payload = joblib.load(path)
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise LearnerError(f"{path} is not a '{MODEL_FORMAT}' model file")
    return payload["model"]
