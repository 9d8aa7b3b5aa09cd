"""
Logistic meta-model over the node2vec and LINE pipeline probabilities.

Fitted by Newton / IRLS with step halving on the L2-penalized log-likelihood.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from src.errors import LearnerError

logger = logging.getLogger(__name__)

PENALTY = 1e-6
TOLERANCE = 1e-8
MAX_ITERATIONS = 1000


@dataclass(frozen=True, eq=False)
class MetaModel:
    weights: np.ndarray  # intercept, p_a, p_b
    iterations: int = 0
    converged: bool = True


def _design(p_a, p_b) -> np.ndarray:
    p_a = np.asarray(p_a, dtype=np.float64)
    p_b = np.asarray(p_b, dtype=np.float64)
    if p_a.shape != p_b.shape or p_a.ndim != 1:
        raise LearnerError(f"probability vectors must be 1-d of equal length, got {p_a.shape} and {p_b.shape}")
    return np.column_stack([np.ones(len(p_a)), p_a, p_b])


def meta_objective(weights, p_a, p_b, labels, penalty: float = PENALTY) -> float:
    """Penalized log-likelihood (to maximize)."""
    X = _design(p_a, p_b)
    y = np.asarray(labels, dtype=np.float64)
    z = X @ weights
    return float(np.sum(y * z - np.logaddexp(0.0, z)) - 0.5 * penalty * np.dot(weights, weights))


def meta_gradient(weights, p_a, p_b, labels, penalty: float = PENALTY) -> np.ndarray:
    X = _design(p_a, p_b)
    y = np.asarray(labels, dtype=np.float64)
    return X.T @ (y - expit(X @ weights)) - penalty * np.asarray(weights)


def train_meta(
    p_a,
    p_b,
    labels,
    penalty: float = PENALTY,
    tol: float = TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> MetaModel:
    """
    Fit sigmoid(w0 + w1·p_a + w2·p_b) to the labels.

    Args:
        p_a: Probabilities of the first pipeline
        p_b: Probabilities of the second pipeline
        labels: 0/1 labels
        penalty: L2 penalty on every weight
        tol: Stop once the weight update norm falls below this
        max_iter: Iteration cap

    Returns:
        MetaModel
    """
    X = _design(p_a, p_b)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (len(X),):
        raise LearnerError(f"expected {len(X)} labels, got {y.shape}")
    if len(np.unique(y)) < 2:
        raise LearnerError("degenerate labels")

    w = np.zeros(3)
    objective = meta_objective(w, p_a, p_b, y, penalty)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        mu = expit(X @ w)
        gradient = X.T @ (y - mu) - penalty * w
        hessian = (X * (mu * (1.0 - mu))[:, None]).T @ X + penalty * np.eye(3)
        step = np.linalg.lstsq(hessian, gradient, rcond=None)[0]

        scale = 1.0
        candidate = w + step
        value = meta_objective(candidate, p_a, p_b, y, penalty)
        while value < objective and scale > 1e-10:
            scale *= 0.5
            candidate = w + scale * step
            value = meta_objective(candidate, p_a, p_b, y, penalty)
        if value < objective:
            # no ascent direction left at machine precision
            converged = True
            break

        delta = np.linalg.norm(candidate - w)
        w, objective = candidate, value
        if delta < tol:
            converged = True
            break

    z = X @ w
    if z[y == 1].size and z[y == 0].size and z[y == 1].min() > z[y == 0].max():
        logger.warning("Meta-model training data is perfectly separable; weights are bounded only by the penalty")
    if not converged:
        logger.warning(f"Meta-model stopped at the iteration cap ({max_iter}) without converging")
    if not np.all(np.isfinite(w)):
        raise LearnerError("meta-model weights diverged")
    logger.debug(f"Meta-model weights {np.round(w, 4).tolist()} after {iteration} iterations")
    return MetaModel(weights=w, iterations=iteration, converged=converged)


def predict_meta(model: MetaModel, p_a, p_b) -> np.ndarray:
    return expit(_design(p_a, p_b) @ model.weights)
