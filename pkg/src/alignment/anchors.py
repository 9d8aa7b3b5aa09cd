"""
Anchor scoring and selection.

An anchor is a module present in both versions. Scorers rank the shared
modules; the top-N become the paired points the transform is fitted on.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Set, Tuple

import numpy as np
from sklearn.neighbors import NearestNeighbors

from src.embeddings.base import EmbeddingMatrix
from src.errors import AlignmentError, ConfigurationError
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)

STRATEGIES = ("knn", "gns", "random")
KNN_METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class AnchorSet:
    pairs: Tuple[Tuple[str, float], ...]  # score descending, ties by name
    strategy: str
    requested: Optional[int]  # None means every shared module

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def knn_neighbor_sets(embedding: EmbeddingMatrix, k: int, metric: str = "euclidean") -> Dict[str, Set[str]]:
    """The k nearest neighbors of every node, the node itself excluded."""
    if k < 1:
        raise AlignmentError(f"k must be at least 1, got {k}")
    if k >= len(embedding):
        raise AlignmentError(f"k={k} needs more than {k} embedded nodes, got {len(embedding)}")
    if metric not in KNN_METRICS:
        raise AlignmentError(f"unknown k-NN metric '{metric}'")
    index = NearestNeighbors(n_neighbors=k, algorithm="brute", metric=metric).fit(embedding.vectors)
    # no query argument: each indexed point is not its own neighbor
    neighbors = index.kneighbors(return_distance=False)
    names = embedding.node_ids
    return {names[i]: {names[j] for j in row} for i, row in enumerate(neighbors)}


def score_knn_anchor(
    emb0: EmbeddingMatrix, emb1: EmbeddingMatrix, node: str, k: int = 10, metric: str = "euclidean"
) -> float:
    """|N0 ∩ N1| / k over the node's k nearest neighbors in each embedding."""
    for label, emb in (("old", emb0), ("new", emb1)):
        if node not in emb:
            raise AlignmentError(f"node '{node}' missing from the {label} embedding")
    return KnnAnchorScorer(emb0, emb1, k, metric).score(node)


def gns_score(m0: Set[str], m1: Set[str]) -> float:
    union = m0 | m1
    if not union:
        return 0.0
    return len(m0 & m1) ** 2 / len(union)


def score_gns_anchor(g0: SimpleDigraph, g1: SimpleDigraph, node: str) -> float:
    """|M0 ∩ M1|² / |M0 ∪ M1| over the node's in- and out-neighbors in each graph."""
    for label, graph in (("old", g0), ("new", g1)):
        if node not in graph:
            raise AlignmentError(f"node '{node}' missing from the {label} graph")
    return gns_score(g0.neighbors(node), g1.neighbors(node))


class BaseAnchorScorer(ABC):
    """Abstract base class for anchor scorers."""

    strategy: str = ""

    @abstractmethod
    def score(self, node: str) -> float:
        raise NotImplementedError

    def score_all(self, candidates: Iterable[str]) -> Dict[str, float]:
        return {node: self.score(node) for node in sorted(candidates)}


class KnnAnchorScorer(BaseAnchorScorer):
    strategy = "knn"

    def __init__(self, emb0: EmbeddingMatrix, emb1: EmbeddingMatrix, k: int = 10, metric: str = "euclidean"):
        self.k = k
        self._old = knn_neighbor_sets(emb0, k, metric)
        self._new = knn_neighbor_sets(emb1, k, metric)

    def score(self, node: str) -> float:
        if node not in self._old or node not in self._new:
            raise AlignmentError(f"node '{node}' is not embedded in both versions")
        return len(self._old[node] & self._new[node]) / self.k


class GnsAnchorScorer(BaseAnchorScorer):
    strategy = "gns"

    def __init__(self, g0: SimpleDigraph, g1: SimpleDigraph):
        self.g0 = g0
        self.g1 = g1

    def score(self, node: str) -> float:
        return score_gns_anchor(self.g0, self.g1, node)


class RandomAnchorScorer(BaseAnchorScorer):
    """Uniform random scores; the top-N of them is a uniform sample without replacement."""

    strategy = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score(self, node: str) -> float:
        return self.score_all([node])[node]

    def score_all(self, candidates: Iterable[str]) -> Dict[str, float]:
        names = sorted(candidates)
        draws = np.random.default_rng(self.seed).random(len(names))
        return dict(zip(names, draws.tolist()))


def get_anchor_scorer(
    strategy: str,
    emb0: Optional[EmbeddingMatrix] = None,
    emb1: Optional[EmbeddingMatrix] = None,
    g0: Optional[SimpleDigraph] = None,
    g1: Optional[SimpleDigraph] = None,
    k: int = 10,
    metric: str = "euclidean",
    seed: int = 0,
) -> BaseAnchorScorer:
    """Factory function to get the scorer for an anchor strategy."""
    strategy = strategy.lower()
    if strategy == "knn":
        if emb0 is None or emb1 is None:
            raise AlignmentError("knn anchors need both embeddings")
        return KnnAnchorScorer(emb0, emb1, k, metric)
    elif strategy == "gns":
        if g0 is None or g1 is None:
            raise AlignmentError("gns anchors need both graphs")
        return GnsAnchorScorer(g0, g1)
    elif strategy == "random":
        return RandomAnchorScorer(seed)
    raise ConfigurationError(f"unknown anchor strategy '{strategy}' (expected one of {', '.join(STRATEGIES)})")


def select_anchors(
    candidates: Iterable[str],
    scorer: BaseAnchorScorer,
    n: Optional[int],
    dim: Optional[int] = None,
) -> AnchorSet:
    """
    Keep the ``n`` best-scoring candidates.

    Args:
        candidates: Modules shared by both versions
        scorer: Anchor scorer
        n: Anchor count, or None for every candidate
        dim: Embedding dimension; fewer anchors than this triggers a warning

    Returns:
        AnchorSet sorted by score descending, ties broken by name
    """
    candidates = set(candidates)
    if not candidates:
        raise AlignmentError("no shared modules")
    if n is not None and n < 1:
        raise AlignmentError(f"anchor count must be at least 1, got {n}")

    scores = scorer.score_all(candidates)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    if n is not None:
        ranked = ranked[:n]
    if dim is not None and len(ranked) < dim:
        logger.warning(f"Only {len(ranked)} anchors for a {dim}-dimensional alignment; the transform is underdetermined")
    logger.debug(f"Selected {len(ranked)} of {len(candidates)} {scorer.strategy} anchors")
    return AnchorSet(tuple(ranked), scorer.strategy, n)
