import logging
from typing import Dict, Optional, Type

from src.embeddings.base import BaseEmbedder, EmbedConfig, EmbeddingMatrix
from src.embeddings.line import Line2Embedder
from src.embeddings.node2vec import Node2VecEmbedder
from src.errors import ConfigurationError, Diagnostic
from src.graphs.model import SimpleDigraph, strip

logger = logging.getLogger(__name__)

EMBEDDERS: Dict[str, Type[BaseEmbedder]] = {
    Node2VecEmbedder.name: Node2VecEmbedder,
    Line2Embedder.name: Line2Embedder,
}


def get_embedder(config: EmbedConfig) -> BaseEmbedder:
    """Factory function to get the embedder for ``config.algorithm``."""
    algorithm = config.algorithm.lower()
    if algorithm not in EMBEDDERS:
        message = f"unknown embedding algorithm '{config.algorithm}' (expected one of {', '.join(EMBEDDERS)})"
        raise ConfigurationError(message, [Diagnostic("fatal", "unknown-algorithm", message)])
    return EMBEDDERS[algorithm](config)


def embed(graph, config: EmbedConfig, seed: Optional[int] = None) -> EmbeddingMatrix:
    """Embed a CDN or stripped graph with the configured algorithm."""
    embedder = get_embedder(config)
    seed = config.seed if seed is None else seed
    stripped: SimpleDigraph = strip(graph)
    logger.info(f"🧭 Embedding {len(stripped)} nodes / {stripped.edge_count} edges with {embedder.name} (d={config.dim}, seed={seed})")
    return embedder.fit(stripped, seed)
