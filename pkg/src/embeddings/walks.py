"""
Second-order biased random walks over a stripped CDN.

Walks follow out-edges only and stop early at nodes without successors.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.errors import EmbeddingError
from src.graphs.model import SimpleDigraph

logger = logging.getLogger(__name__)

Distribution = Tuple[np.ndarray, np.ndarray]  # successor indices, probabilities


class BiasedWalker:
    """
    node2vec transition sampler.

    From ``cur`` having arrived from ``prev``, successor x has unnormalized
    weight 1/p if x is ``prev``, 1 if x has an edge to ``prev``, 1/q otherwise.
    The first step of a walk is uniform over the out-neighbors.
    """

    def __init__(self, graph: SimpleDigraph, p: float = 1.0, q: float = 1.0):
        if p <= 0 or q <= 0:
            raise EmbeddingError(f"p and q must be positive, got p={p}, q={q}")
        self.graph = graph
        self.p = p
        self.q = q
        self._first: Dict[int, Distribution] = {}
        self._second: Dict[Tuple[int, int], Distribution] = {}

    def first_distribution(self, cur: int) -> Distribution:
        if cur not in self._first:
            succ = np.array(self.graph.successors[cur], dtype=np.int64)
            probs = np.full(len(succ), 1.0 / len(succ)) if len(succ) else np.empty(0)
            self._first[cur] = (succ, probs)
        return self._first[cur]

    def transition_distribution(self, prev: int, cur: int) -> Distribution:
        key = (prev, cur)
        if key not in self._second:
            succ = self.graph.successors[cur]
            sets = self.graph.successor_sets
            weights = np.empty(len(succ))
            for i, x in enumerate(succ):
                if x == prev:
                    weights[i] = 1.0 / self.p
                elif prev in sets[x]:
                    weights[i] = 1.0
                else:
                    weights[i] = 1.0 / self.q
            total = weights.sum()
            self._second[key] = (np.array(succ, dtype=np.int64), weights / total if len(succ) else weights)
        return self._second[key]

    def step(self, rng: np.random.Generator, prev: Optional[int], cur: int) -> Optional[int]:
        """Draw the next node, or None at a sink."""
        succ, probs = self.first_distribution(cur) if prev is None else self.transition_distribution(prev, cur)
        if len(succ) == 0:
            return None
        if len(succ) == 1:
            return int(succ[0])
        position = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        return int(succ[min(position, len(succ) - 1)])

    def walk(self, rng: np.random.Generator, start: int, length: int) -> List[int]:
        walk = [start]
        prev: Optional[int] = None
        while len(walk) < length:
            nxt = self.step(rng, prev, walk[-1])
            if nxt is None:
                break
            prev = walk[-1]
            walk.append(nxt)
        return walk


def _walks_from(graph: SimpleDigraph, p: float, q: float, starts: List[int], count: int, length: int, seed: int):
    walker = BiasedWalker(graph, p, q)
    result = []
    for start in starts:
        rng = np.random.default_rng([seed, start])
        result.append([walker.walk(rng, start, length) for _ in range(count)])
    return result


def sample_walks(
    graph: SimpleDigraph,
    p: float = 1.0,
    q: float = 1.0,
    walks_per_node: int = 10,
    walk_length: int = 80,
    seed: int = 0,
    workers: int = 1,
) -> List[List[str]]:
    """
    Sample ``walks_per_node`` walks from every node.

    Each start node draws from its own generator seeded with (seed, node index),
    so the result does not depend on ``workers``.

    Returns:
        Walks as node-name lists, ordered round by round over the sorted nodes
    """
    if len(graph) == 0:
        raise EmbeddingError("cannot sample walks on an empty graph")
    if walks_per_node < 1 or walk_length < 1:
        raise EmbeddingError("walks_per_node and walk_length must be at least 1")

    starts = list(range(len(graph)))
    if workers > 1 and len(starts) > 1:
        chunks = [starts[i::workers] for i in range(workers)]
        parts = Parallel(n_jobs=workers)(
            delayed(_walks_from)(graph, p, q, chunk, walks_per_node, walk_length, seed) for chunk in chunks if chunk
        )
        per_node = {}
        for chunk, part in zip([c for c in chunks if c], parts):
            per_node.update(zip(chunk, part))
        per_start = [per_node[s] for s in starts]
    else:
        per_start = _walks_from(graph, p, q, starts, walks_per_node, walk_length, seed)

    names = graph.nodes
    walks = [[names[i] for i in per_start[s][r]] for r in range(walks_per_node) for s in starts]
    logger.debug(f"Sampled {len(walks)} walks over {len(graph)} nodes (p={p}, q={q})")
    return walks
