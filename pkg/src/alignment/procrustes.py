"""
Alignment transforms: orthogonal Procrustes and zero-intercept least squares.

Anchor matrices are d x n with one anchor per column: X from the new
version's embedding, Y from the old one's. A fitted T maps new onto old,
Y ≈ T X, so the classifier works in the training version's space.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import orthogonal_procrustes
from sklearn.linear_model import LinearRegression

from src.alignment.anchors import AnchorSet
from src.embeddings.base import EmbeddingMatrix
from src.errors import AlignmentError, ConfigurationError

logger = logging.getLogger(__name__)

METHODS = ("orthogonal", "linear")


@dataclass(frozen=True, eq=False)
class AlignmentTransform:
    matrix: np.ndarray  # d x d
    method: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def orthogonality_error(self) -> float:
        """max |TᵀT − I|"""
        return float(np.max(np.abs(self.matrix.T @ self.matrix - np.eye(self.dim))))

    @classmethod
    def identity(cls, dim: int) -> "AlignmentTransform":
        return cls(np.eye(dim), "orthogonal")


def _check_pair(X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape != Y.shape:
        raise AlignmentError(f"anchor matrices must be d x n of equal shape, got {X.shape} and {Y.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise AlignmentError(f"cannot fit a transform on a {X.shape[0]} x {X.shape[1]} anchor matrix")
    return X, Y


def fit_orthogonal(X: np.ndarray, Y: np.ndarray) -> AlignmentTransform:
    """T = UVᵀ from the SVD of YXᵀ; minimizes ‖Y − TX‖_F over orthogonal T."""
    X, Y = _check_pair(X, Y)
    # scipy solves min ‖A R − B‖ for row-major points: A = Xᵀ, B = Yᵀ, T = Rᵀ
    R, _ = orthogonal_procrustes(X.T, Y.T)
    return AlignmentTransform(R.T, "orthogonal")


def fit_linear(X: np.ndarray, Y: np.ndarray) -> AlignmentTransform:
    """
    Unconstrained least squares with no intercept, one regression per output dimension.

    Rank-deficient anchors (n < d or rank(X) < d) give the minimum-norm solution.
    """
    X, Y = _check_pair(X, Y)
    d, n = X.shape
    rank = np.linalg.matrix_rank(X)
    if rank < d:
        logger.warning(f"Linear alignment on rank-{rank} anchors (d={d}, n={n}); using the minimum-norm solution")
    model = LinearRegression(fit_intercept=False).fit(X.T, Y.T)
    return AlignmentTransform(np.atleast_2d(model.coef_).reshape(d, d), "linear")


def fit_transform(method: str, X: np.ndarray, Y: np.ndarray) -> AlignmentTransform:
    if method == "orthogonal":
        return fit_orthogonal(X, Y)
    elif method == "linear":
        return fit_linear(X, Y)
    raise ConfigurationError(f"unknown alignment method '{method}' (expected one of {', '.join(METHODS)})")


def residual(transform: AlignmentTransform, X: np.ndarray, Y: np.ndarray) -> float:
    """‖Y − TX‖_F"""
    X, Y = _check_pair(X, Y)
    return float(np.linalg.norm(Y - transform.matrix @ X, "fro"))


def apply_transform(transform: AlignmentTransform, embedding: EmbeddingMatrix) -> EmbeddingMatrix:
    """Replace every vector v by T·v."""
    if transform.matrix.shape != (embedding.dim, embedding.dim):
        raise AlignmentError(
            f"transform of shape {transform.matrix.shape} does not fit a {embedding.dim}-dimensional embedding"
        )
    return embedding.with_vectors(embedding.vectors @ transform.matrix.T, aligned=transform.method)


def anchor_matrices(anchors: AnchorSet, old: EmbeddingMatrix, new: EmbeddingMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """(X, Y): anchor columns from the new and the old embedding."""
    if old.dim != new.dim:
        raise AlignmentError(f"embedding dimensions differ: {old.dim} vs {new.dim}")
    names = anchors.names
    return new.rows(names).T, old.rows(names).T


def align_embeddings(
    anchors: AnchorSet, old: EmbeddingMatrix, new: EmbeddingMatrix, method: str = "orthogonal"
) -> Tuple[EmbeddingMatrix, AlignmentTransform]:
    """Fit the transform on the anchors and map the new embedding into the old space."""
    X, Y = anchor_matrices(anchors, old, new)
    transform = fit_transform(method, X, Y)
    logger.debug(f"{method} alignment on {len(anchors)} anchors, residual {residual(transform, X, Y):.4g}")
    return apply_transform(transform, new), transform
