"""
Embedding files.

    emb v1 <dim> <algorithm> <seed>
    <fqn> <v1> ... <vd>
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from src.embeddings.base import EmbeddingMatrix
from src.errors import EmbeddingError

logger = logging.getLogger(__name__)

EMB_MAGIC = "emb v1"


def write_embedding(embedding: EmbeddingMatrix, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    algorithm = embedding.metadata.get("algorithm", "unknown")
    seed = embedding.metadata.get("seed", 0)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{EMB_MAGIC} {embedding.dim} {algorithm} {seed}\n")
        for name, row in zip(embedding.node_ids, embedding.vectors):
            f.write(name + " " + " ".join(repr(float(v)) for v in row) + "\n")
    logger.debug(f"Wrote {len(embedding)} vectors to {path}")


def read_embedding(path: Union[str, Path]) -> EmbeddingMatrix:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise EmbeddingError(f"{path}: empty embedding file")
    header = lines[0].split()
    if len(header) != 5 or " ".join(header[:2]) != EMB_MAGIC:
        raise EmbeddingError(f"{path}: bad header '{lines[0]}'")
    try:
        dim, seed = int(header[2]), int(header[4])
    except ValueError:
        raise EmbeddingError(f"{path}: bad header '{lines[0]}'")

    names, rows = [], []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != dim + 1:
            raise EmbeddingError(f"{path}:{number}: expected {dim} values, got {len(fields) - 1}")
        try:
            rows.append([float(v) for v in fields[1:]])
        except ValueError:
            raise EmbeddingError(f"{path}:{number}: non-numeric value")
        names.append(fields[0])

    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingMatrix(tuple(names), vectors, {"algorithm": header[3], "seed": seed, "dim": dim})
