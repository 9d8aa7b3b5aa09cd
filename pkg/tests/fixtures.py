"""Shared builders for the test suite."""

import itertools
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np

from src.datasets.metrics import METRIC_COLUMNS, ModuleRecord, write_metrics_csv
from src.embeddings.base import EmbeddingMatrix
from src.graphs.model import SimpleDigraph

# Code and extracted CDN example: four types in the default package.
SAMPLE_SOURCE = """
interface Ifc{
    void f();
}

public class Ac implements Ifc{
    private Cc c;

    public void f(){
        c = new Cc();
    }
}

public class Bc extends Ac{
    public Cc f2(Ifc i, Cc c2){
        i.f();
        return this.c;
    }
}

public class Cc{
}
"""

SAMPLE_EDGES = {
    ("Ac", "Ifc", "I"),
    ("Ac", "Cc", "CM"),
    ("Ac", "Cc", "OI"),
    ("Bc", "Ac", "E"),
    ("Bc", "Cc", "R"),
    ("Bc", "Cc", "P"),
    ("Bc", "Ifc", "P"),
}


def write_tree(root: Path, files: Dict[str, str]) -> Path:
    for relative, text in files.items():
        path = root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return root


def digraph(edges: Iterable[str], nodes: Iterable[str] = ()) -> SimpleDigraph:
    """Build a digraph from 'a>b' strings."""
    pairs = [tuple(edge.split(">")) for edge in edges]
    names = set(nodes) | {n for pair in pairs for n in pair}
    return SimpleDigraph.from_edges(names, pairs)


def complete_digraph(names: List[str]) -> SimpleDigraph:
    return SimpleDigraph.from_edges(names, itertools.permutations(names, 2))


def two_communities(size: int = 10, p_in: float = 0.6, p_out: float = 0.05, seed: int = 0) -> SimpleDigraph:
    """Planted two-block digraph; nodes a0.. and b0.."""
    rng = np.random.default_rng(seed)
    names = [f"a{i}" for i in range(size)] + [f"b{i}" for i in range(size)]
    edges = []
    for u, v in itertools.permutations(names, 2):
        p = p_in if u[0] == v[0] else p_out
        if rng.random() < p:
            edges.append((u, v))
    return SimpleDigraph.from_edges(names, edges)


def random_embedding(names: Iterable[str], dim: int, seed: int = 0) -> EmbeddingMatrix:
    names = sorted(names)
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(tuple(names), rng.normal(size=(len(names), dim)))


def make_records(names: Iterable[str], seed: int = 0, signal: Dict[str, int] = None) -> List[ModuleRecord]:
    """Records with random metrics; ``signal`` maps names to bug counts (others random)."""
    rng = np.random.default_rng(seed)
    records = []
    for name in sorted(names):
        metrics = tuple(float(x) for x in rng.integers(0, 50, size=len(METRIC_COLUMNS)))
        bug = signal[name] if signal and name in signal else int(rng.integers(0, 2))
        records.append(ModuleRecord(name, metrics, bug))
    return records


def write_records(path: Path, records: List[ModuleRecord]) -> Path:
    write_metrics_csv(records, path)
    return path


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def mean_cosine(embedding: EmbeddingMatrix, pairs) -> float:
    return float(np.mean([cosine(embedding.vector(a), embedding.vector(b)) for a, b in pairs]))
