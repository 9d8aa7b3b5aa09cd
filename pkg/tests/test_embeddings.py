import itertools
import tempfile
import unittest
from collections import Counter
from pathlib import Path

import numpy as np
from scipy.stats import chisquare

from src.embeddings.base import EmbedConfig, EmbeddingMatrix, Line2Params, Node2VecParams, initial_vectors
from src.embeddings.factory import embed, get_embedder
from src.embeddings.io import read_embedding, write_embedding
from src.embeddings.line import train_line2
from src.embeddings.node2vec import train_skipgram
from src.embeddings.walks import BiasedWalker, sample_walks
from src.errors import ConfigurationError, EmbeddingError
from tests.fixtures import complete_digraph, digraph, mean_cosine, two_communities

# 5-node fixture with a mix of return, distance-1 and distance-2 moves
BIAS_FIXTURE = ["a>b", "b>a", "b>c", "b>d", "b>e", "c>a", "d>e", "e>b", "c>d"]


def expected_transition(graph, prev: str, cur: str, p: float, q: float):
    """Closed-form second-order distribution by enumeration."""
    weights = {}
    for x in sorted(graph.out_neighbors(cur)):
        if x == prev:
            weights[x] = 1.0 / p
        elif graph.has_edge(x, prev):
            weights[x] = 1.0
        else:
            weights[x] = 1.0 / q
    total = sum(weights.values())
    return {x: w / total for x, w in weights.items()}


def small_config(algorithm: str, dim: int = 16, sample_count: int = 60000) -> EmbedConfig:
    return EmbedConfig(
        algorithm=algorithm,
        dim=dim,
        node2vec=Node2VecParams(walks_per_node=20, walk_length=20, window=5, epochs=5),
        line2=Line2Params(sample_count=sample_count),
    )


class TestWalks(unittest.TestCase):

    def test_single_node_walks(self):
        graph = digraph([], nodes=["v"])
        walks = sample_walks(graph, walks_per_node=3, walk_length=5)
        self.assertEqual(walks, [["v"], ["v"], ["v"]])

    def test_chain_is_deterministic(self):
        graph = digraph(["a>b", "b>c"])
        walks = sample_walks(graph, walks_per_node=4, walk_length=3, seed=9)
        self.assertEqual([w for w in walks if w[0] == "a"], [["a", "b", "c"]] * 4)
        self.assertEqual([w for w in walks if w[0] == "c"], [["c"]] * 4)

    def test_empty_graph_rejected(self):
        with self.assertRaises(EmbeddingError):
            sample_walks(digraph([]))

    def test_walk_validity_and_counts(self):
        graph = two_communities(seed=2)
        walks = sample_walks(graph, walks_per_node=3, walk_length=15, seed=1, p=0.5, q=2.0)
        self.assertEqual(len(walks), 3 * len(graph))
        for walk in walks:
            self.assertLessEqual(len(walk), 15)
            for a, b in zip(walk, walk[1:]):
                self.assertTrue(graph.has_edge(a, b))

    def test_workers_do_not_change_walks(self):
        graph = two_communities(seed=4)
        self.assertEqual(
            sample_walks(graph, walks_per_node=2, walk_length=10, seed=3, workers=1),
            sample_walks(graph, walks_per_node=2, walk_length=10, seed=3, workers=3),
        )

    def test_uniform_first_order_on_complete_graph(self):
        graph = complete_digraph(["a", "b", "c", "d"])
        walker = BiasedWalker(graph, 1.0, 1.0)
        rng = np.random.default_rng(0)
        prev, cur = graph.index["a"], graph.index["b"]
        samples = 100_000
        counts = Counter(walker.step(rng, prev, cur) for _ in range(samples))
        expected = samples / 3
        sigma = np.sqrt(samples * (1 / 3) * (2 / 3))
        self.assertEqual(set(counts), {graph.index[n] for n in "acd"})
        for count in counts.values():
            self.assertLess(abs(count - expected), 3 * sigma)

    def test_bias_matches_closed_form(self):
        graph = digraph(BIAS_FIXTURE)
        rng = np.random.default_rng(12345)
        for p, q in ((1.0, 1.0), (0.25, 4.0), (4.0, 0.25)):
            walker = BiasedWalker(graph, p, q)
            for prev, cur in (("a", "b"), ("c", "d"), ("e", "b")):
                expected = expected_transition(graph, prev, cur, p, q)
                succ, probs = walker.transition_distribution(graph.index[prev], graph.index[cur])
                np.testing.assert_allclose(probs, [expected[graph.nodes[i]] for i in succ])

            samples = 100_000
            prev, cur = graph.index["a"], graph.index["b"]
            draws = Counter(walker.step(rng, prev, cur) for _ in range(samples))
            expected = expected_transition(graph, "a", "b", p, q)
            observed = [draws.get(graph.index[x], 0) for x in sorted(expected)]
            result = chisquare(observed, [samples * expected[x] for x in sorted(expected)])
            self.assertGreater(result.pvalue, 0.01, f"p={p}, q={q}")


class TestNode2Vec(unittest.TestCase):

    def test_single_walk_keeps_initial_vector(self):
        config = EmbedConfig(dim=8)
        embedding = train_skipgram([["a"]], config, seed=5)
        self.assertEqual(embedding.node_ids, ("a",))
        expected = initial_vectors(1, 8, 5).astype(np.float32)[0]
        np.testing.assert_array_equal(embedding.vector("a"), expected)

    def test_shape_and_finiteness(self):
        graph = two_communities(seed=1)
        embedding = embed(graph, small_config("node2vec", dim=12))
        self.assertEqual(embedding.vectors.shape, (len(graph.connected_nodes()), 12))
        self.assertTrue(np.all(np.isfinite(embedding.vectors)))
        self.assertEqual(embedding.metadata["algorithm"], "node2vec")

    def test_isolated_nodes_are_not_embedded(self):
        graph = digraph(["a>b", "b>c", "c>a"], nodes=["lonely"])
        embedding = embed(graph, small_config("node2vec", dim=4))
        self.assertEqual(embedding.node_ids, ("a", "b", "c"))

    def test_deterministic_single_worker(self):
        graph = two_communities(seed=6)
        config = small_config("node2vec", dim=8)
        self.assertTrue(embed(graph, config, seed=3).allclose(embed(graph, config, seed=3)))

    def test_embed_equals_composition(self):
        graph = two_communities(seed=7)
        config = small_config("node2vec", dim=8)
        params = config.node2vec
        walks = sample_walks(graph, params.p, params.q, params.walks_per_node, params.walk_length, seed=11)
        composed = train_skipgram(walks, config, seed=11)
        self.assertTrue(embed(graph, config, seed=11).allclose(composed.subset(graph.connected_nodes())))

    def test_community_separation(self):
        graph = two_communities(size=10, p_in=0.6, p_out=0.05, seed=0)
        intra = [(u, v) for u, v in itertools.combinations(graph.nodes, 2) if u[0] == v[0]]
        inter = [(u, v) for u, v in itertools.product(graph.nodes, graph.nodes) if u[0] == "a" and v[0] == "b"]
        wins = 0
        for seed in range(5):
            embedding = embed(graph, small_config("node2vec"), seed=seed)
            wins += mean_cosine(embedding, intra) > mean_cosine(embedding, inter)
        self.assertGreaterEqual(wins, 4)


class TestLine2(unittest.TestCase):

    def test_empty_edge_set(self):
        with self.assertRaisesRegex(EmbeddingError, "empty edge set"):
            train_line2(digraph([], nodes=["a", "b"]), small_config("line2"), seed=0)

    def test_single_edge(self):
        embedding = train_line2(digraph(["a>b"]), small_config("line2", dim=4), seed=0)
        self.assertEqual(embedding.node_ids, ("a", "b"))
        self.assertTrue(np.all(np.isfinite(embedding.vectors)))

    def test_zero_samples_keep_initialization(self):
        graph = digraph(["a>b", "b>c"], nodes=["z"])
        embedding = train_line2(graph, small_config("line2", dim=4, sample_count=0), seed=3)
        init = initial_vectors(len(graph), 4, 3)
        keep = [graph.index[n] for n in ("a", "b", "c")]
        np.testing.assert_array_equal(embedding.vectors, init[keep])

    def test_second_order_proximity(self):
        targets = [f"t{i}" for i in range(6)]
        others = [f"o{i}" for i in range(6)]
        edges = [f"u>{t}" for t in targets] + [f"w>{t}" for t in targets] + [f"c>{o}" for o in others]
        graph = digraph(edges)
        similar, control = [], []
        for seed in range(5):
            embedding = embed(graph, small_config("line2", sample_count=20000), seed=seed)
            similar.append(mean_cosine(embedding, [("u", "w")]))
            control.append(mean_cosine(embedding, [("u", "c")]))
        self.assertGreater(np.mean(similar), np.mean(control))

    def test_community_separation(self):
        graph = two_communities(size=10, p_in=0.6, p_out=0.05, seed=0)
        intra = [(u, v) for u, v in itertools.combinations(graph.nodes, 2) if u[0] == v[0]]
        inter = [(u, v) for u, v in itertools.product(graph.nodes, graph.nodes) if u[0] == "a" and v[0] == "b"]
        wins = 0
        for seed in range(5):
            embedding = embed(graph, small_config("line2"), seed=seed)
            wins += mean_cosine(embedding, intra) > mean_cosine(embedding, inter)
        self.assertGreaterEqual(wins, 4)

    def test_deterministic(self):
        graph = two_communities(seed=3)
        config = small_config("line2", dim=8, sample_count=5000)
        self.assertTrue(embed(graph, config, seed=1).allclose(embed(graph, config, seed=1)))


class TestFactoryAndFiles(unittest.TestCase):

    def test_unknown_algorithm(self):
        with self.assertRaises(ConfigurationError) as ctx:
            get_embedder(EmbedConfig(algorithm="gcn"))
        self.assertEqual(ctx.exception.diagnostics[0].code, "unknown-algorithm")

    def test_line2_dispatch(self):
        graph = digraph(["a>b", "b>c", "c>a"])
        config = small_config("line2", dim=4, sample_count=300)
        self.assertTrue(embed(graph, config, seed=2).allclose(train_line2(graph, config, seed=2)))

    def test_file_round_trip(self):
        embedding = EmbeddingMatrix(("a", "b"), np.array([[0.1, -2.5], [1e-9, 3.0]]), {"algorithm": "line2", "seed": 4})
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.emb"
            write_embedding(embedding, path)
            loaded = read_embedding(path)
            self.assertEqual(path.read_text().splitlines()[0], "emb v1 2 line2 4")
        self.assertTrue(loaded.allclose(embedding))
        self.assertEqual(loaded.metadata["seed"], 4)

    def test_bad_row_width(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.emb"
            path.write_text("emb v1 2 node2vec 0\na 1.0\n")
            with self.assertRaises(EmbeddingError):
                read_embedding(path)

    def test_matrix_rejects_non_finite(self):
        with self.assertRaises(EmbeddingError):
            EmbeddingMatrix(("a",), np.array([[np.nan]]))


if __name__ == '__main__':
    unittest.main()
