"""
Embedding base types: configuration, the embedding matrix and the embedder ABC.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import EmbeddingError
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)


class Node2VecParams(BaseModel):
    p: float = Field(1.0, gt=0)
    q: float = Field(1.0, gt=0)
    walks_per_node: int = Field(10, ge=1)
    walk_length: int = Field(80, ge=1)
    window: int = Field(10, ge=1)
    negatives: int = Field(5, ge=1)
    epochs: int = Field(1, ge=1)
    learning_rate: float = Field(0.025, gt=0)
    downsample: float = Field(0.0, ge=0)  # gensim ``sample``; 0 disables


class Line2Params(BaseModel):
    negatives: int = Field(5, ge=1)
    sample_count: Optional[int] = Field(None, ge=0)  # None -> 100 * |E|
    learning_rate: float = Field(0.025, gt=0)


class EmbedConfig(BaseModel):
    algorithm: str = "node2vec"
    dim: int = Field(32, ge=1)
    node2vec: Node2VecParams = Field(default_factory=Node2VecParams)
    line2: Line2Params = Field(default_factory=Line2Params)
    seed: int = 0
    workers: int = Field(1, ge=1)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Per-node vectors of a fixed dimension, rows in ``node_ids`` order."""

    node_ids: Tuple[str, ...]
    vectors: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.node_ids):
            raise EmbeddingError(
                f"expected {len(self.node_ids)} rows, got array of shape {vectors.shape}"
            )
        if vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be at least 1")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingError("embedding contains non-finite values")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise EmbeddingError("duplicate node ids in embedding")
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_mapping(cls, vectors: Dict[str, Sequence[float]], metadata: Optional[Dict[str, Any]] = None):
        names = sorted(vectors)
        return cls(tuple(names), np.array([vectors[n] for n in names], dtype=np.float64), dict(metadata or {}))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.node_ids)}

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def vector(self, name: str) -> np.ndarray:
        if name not in self.index:
            raise EmbeddingError(f"node '{name}' has no embedding")
        return self.vectors[self.index[name]]

    def rows(self, names: Iterable[str]) -> np.ndarray:
        """Stack the vectors of ``names`` (n x d)."""
        names = list(names)
        missing = [n for n in names if n not in self.index]
        if missing:
            raise EmbeddingError(f"{len(missing)} nodes have no embedding, e.g. '{missing[0]}'")
        return self.vectors[[self.index[n] for n in names]]

    def subset(self, names: Iterable[str]) -> "EmbeddingMatrix":
        keep = sorted(set(names) & set(self.node_ids))
        return EmbeddingMatrix(tuple(keep), self.rows(keep), dict(self.metadata))

    def with_vectors(self, vectors: np.ndarray, **metadata) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.node_ids, vectors, {**self.metadata, **metadata})

    def allclose(self, other: "EmbeddingMatrix", atol: float = 0.0) -> bool:
        return self.node_ids == other.node_ids and np.allclose(self.vectors, other.vectors, rtol=0, atol=atol)


def initial_vectors(count: int, dim: int, seed: int) -> np.ndarray:
    """Uniform initialization in [-0.5/d, 0.5/d] from the seeded generator."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(count, dim))


class BaseEmbedder(ABC):
    """Abstract base class for graph embedders."""

    name: str = ""

    def __init__(self, config: EmbedConfig):
        self.config = config

    @abstractmethod
    def fit(self, graph: SimpleDigraph, seed: int) -> EmbeddingMatrix:
        """
        Learn vectors for the nodes of ``graph`` that have at least one edge.

        Args:
            graph: Stripped CDN
            seed: Seed for every random draw of this run

        Returns:
            EmbeddingMatrix sorted by node name
        """
        raise NotImplementedError

    def _metadata(self, seed: int) -> Dict[str, Any]:
        return {
            "algorithm": self.name,
            "seed": seed,
            "dim": self.config.dim,
            "params": getattr(self.config, self.name).model_dump(),
        }
