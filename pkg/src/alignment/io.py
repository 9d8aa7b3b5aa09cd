"""
Anchor and transform files.

    anchors v1 <strategy> <N|all>       transform v1 <method> <d>
    <fqn> <score>                       <d floats per row>
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from src.alignment.anchors import AnchorSet
from src.alignment.procrustes import METHODS, AlignmentTransform
from src.errors import AlignmentError

logger = logging.getLogger(__name__)


def write_anchors(anchors: AnchorSet, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    requested = "all" if anchors.requested is None else anchors.requested
    lines = [f"anchors v1 {anchors.strategy} {requested}"]
    lines += [f"{name} {score!r}" for name, score in anchors.pairs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_anchors(path: Union[str, Path]) -> AnchorSet:
    lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    header = lines[0].split() if lines else []
    if len(header) != 4 or header[:2] != ["anchors", "v1"]:
        raise AlignmentError(f"{path}: bad anchors header")
    requested = None if header[3] == "all" else int(header[3])
    pairs = []
    for line in lines[1:]:
        name, score = line.split()
        pairs.append((name, float(score)))
    return AnchorSet(tuple(pairs), header[2], requested)


def write_transform(transform: AlignmentTransform, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"transform v1 {transform.method} {transform.dim}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in transform.matrix]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {transform.method} transform to {path}")


def read_transform(path: Union[str, Path]) -> AlignmentTransform:
    lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    header = lines[0].split() if lines else []
    if len(header) != 4 or header[:2] != ["transform", "v1"] or header[2] not in METHODS:
        raise AlignmentError(f"{path}: bad transform header")
    dim = int(header[3])
    try:
        matrix = np.array([[float(v) for v in line.split()] for line in lines[1:]], dtype=np.float64)
    except ValueError:
        raise AlignmentError(f"{path}: non-numeric transform entry")
    if matrix.shape != (dim, dim):
        raise AlignmentError(f"{path}: expected a {dim} x {dim} matrix, got {matrix.shape}")
    return AlignmentTransform(matrix, header[2])
