"""
node2vec embedder: biased walks + skip-gram with negative sampling (gensim).
"""

import logging
from typing import List, Optional

import numpy as np
from gensim.models import Word2Vec

from src.embeddings.base import BaseEmbedder, EmbedConfig, EmbeddingMatrix, initial_vectors
from src.embeddings.walks import sample_walks
from src.errors import EmbeddingError
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)


def train_skipgram(walks: List[List[str]], config: EmbedConfig, seed: int, workers: Optional[int] = None) -> EmbeddingMatrix:
    """
    Learn skip-gram vectors for every node that occurs in ``walks``.

    Vectors start from ``initial_vectors`` (rows in sorted-name order) and the
    learning rate decays linearly to 1e-4 of its initial value. Single-worker
    runs are bit-reproducible for a fixed seed.

    Args:
        walks: Node-name sequences
        config: Embedding configuration (node2vec section is used)
        seed: Seed for initialization and negative sampling
        workers: Training threads; defaults to ``config.workers``

    Returns:
        EmbeddingMatrix over the walk vocabulary
    """
    if not walks or not any(walks):
        raise EmbeddingError("cannot train skip-gram on an empty walk corpus")
    params = config.node2vec
    model = Word2Vec(
        vector_size=config.dim,
        window=params.window,
        min_count=1,
        sg=1,
        hs=0,
        negative=params.negatives,
        ns_exponent=0.75,
        alpha=params.learning_rate,
        min_alpha=params.learning_rate * 1e-4,
        sample=params.downsample,
        seed=seed % (2**32),
        workers=workers or config.workers,
        epochs=params.epochs,
    )
    model.build_vocab(walks)

    names = sorted(model.wv.key_to_index)
    init = initial_vectors(len(names), config.dim, seed)
    for name, row in zip(names, init):
        model.wv.vectors[model.wv.key_to_index[name]] = row

    model.train(walks, total_examples=model.corpus_count, epochs=model.epochs)

    vectors = np.array([model.wv[name] for name in names], dtype=np.float64)
    return EmbeddingMatrix(tuple(names), vectors)


class Node2VecEmbedder(BaseEmbedder):
    """Random-walk skip-gram embedder."""

    name = "node2vec"

    def fit(self, graph: SimpleDigraph, seed: int) -> EmbeddingMatrix:
        params = self.config.node2vec
        walks = sample_walks(
            graph,
            p=params.p,
            q=params.q,
            walks_per_node=params.walks_per_node,
            walk_length=params.walk_length,
            seed=seed,
            workers=self.config.workers,
        )
        embedding = train_skipgram(walks, self.config, seed)
        # isolated nodes only ever see length-1 walks and get no vector
        connected = graph.connected_nodes()
        embedding = embedding.subset(connected)
        logger.debug(f"node2vec: {len(embedding)} of {len(graph)} nodes embedded")
        return embedding.with_vectors(embedding.vectors, **self._metadata(seed))
