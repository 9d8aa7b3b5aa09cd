"""
LINE embedder with second-order proximity.

Each node has a vertex vector and a context vector. Edges are sampled
uniformly (the graph is unweighted) and every positive pair (u, v) is
contrasted with negative contexts drawn proportionally to out-degree^0.75.
The SGD loop runs in a numba kernel over pre-drawn index arrays.
"""

import logging

import numpy as np
from numba import njit

from src.embeddings.base import BaseEmbedder, EmbedConfig, EmbeddingMatrix, initial_vectors
from src.errors import EmbeddingError
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)

SIGMOID_BOUND = 6.0
CHUNK_SIZE = 1 << 18


@njit(cache=True)
def _sigmoid(x):
    if x > SIGMOID_BOUND:
        return 1.0
    if x < -SIGMOID_BOUND:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _line2_sgd(vertex, context, sources, targets, negatives, lr0, offset, total):
    dim = vertex.shape[1]
    err = np.empty(dim)
    for s in range(sources.shape[0]):
        lr = lr0 * max(1e-4, 1.0 - (offset + s) / total)
        u = sources[s]
        err[:] = 0.0
        for k in range(negatives.shape[1] + 1):
            if k == 0:
                target = targets[s]
                label = 1.0
            else:
                target = negatives[s, k - 1]
                if target == targets[s]:
                    continue
                label = 0.0
            score = 0.0
            for j in range(dim):
                score += vertex[u, j] * context[target, j]
            g = (label - _sigmoid(score)) * lr
            for j in range(dim):
                err[j] += g * context[target, j]
                context[target, j] += g * vertex[u, j]
        for j in range(dim):
            vertex[u, j] += err[j]


def train_line2(graph: SimpleDigraph, config: EmbedConfig, seed: int) -> EmbeddingMatrix:
    """
    Train second-order LINE vectors.

    Args:
        graph: Stripped CDN with at least one edge
        config: Embedding configuration (line2 section is used)
        seed: Seed for initialization, edge sampling and negative sampling

    Returns:
        Vertex vectors of the nodes with at least one incident edge
    """
    edges = np.array(graph.edge_index_pairs(), dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        raise EmbeddingError("empty edge set")

    params = config.line2
    samples = params.sample_count if params.sample_count is not None else 100 * len(edges)
    n = len(graph)
    rng = np.random.default_rng(seed)

    vertex = initial_vectors(n, config.dim, seed)
    context = np.zeros((n, config.dim))

    out_degree = np.array([len(s) for s in graph.successors], dtype=np.float64)
    noise = out_degree**0.75
    noise /= noise.sum()

    done = 0
    while done < samples:
        batch = min(CHUNK_SIZE, samples - done)
        picked = rng.integers(0, len(edges), size=batch)
        negatives = rng.choice(n, size=(batch, params.negatives), p=noise)
        _line2_sgd(
            vertex,
            context,
            edges[picked, 0],
            edges[picked, 1],
            negatives,
            params.learning_rate,
            done,
            float(samples),
        )
        done += batch
    logger.debug(f"LINE: {samples} edge samples over {len(edges)} edges")

    keep = [graph.index[name] for name in graph.connected_nodes()]
    return EmbeddingMatrix(tuple(graph.nodes[i] for i in keep), vertex[keep])


class Line2Embedder(BaseEmbedder):
    """Second-order proximity embedder."""

    name = "line2"

    def fit(self, graph: SimpleDigraph, seed: int) -> EmbeddingMatrix:
        embedding = train_line2(graph, self.config, seed)
        return embedding.with_vectors(embedding.vectors, **self._metadata(seed))
