"""
Classification metrics: AUC, F1 and ROC points.
"""

from typing import Tuple

import numpy as np
from sklearn.metrics import f1_score, roc_auc_score, roc_curve

from src.errors import EvaluationError

DEFAULT_THRESHOLD = 0.5


def _labels(labels) -> np.ndarray:
    y = np.asarray(labels).astype(np.int64)
    if y.ndim != 1:
        raise EvaluationError("labels must be one-dimensional")
    return y


def auc(scores, labels) -> float:
    """Area under the ROC curve; tied (positive, negative) pairs count one half."""
    y = _labels(labels)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != y.shape:
        raise EvaluationError(f"{len(s)} scores for {len(y)} labels")
    if len(np.unique(y)) < 2:
        raise EvaluationError("AUC needs both classes in the labels")
    return float(roc_auc_score(y, s))


def f1(predictions, labels) -> float:
    """F1 of the defective class; 0 when precision + recall is 0."""
    y = _labels(labels)
    p = _labels(predictions)
    if p.shape != y.shape:
        raise EvaluationError(f"{len(p)} predictions for {len(y)} labels")
    return float(f1_score(y, p, pos_label=1, labels=[0, 1], zero_division=0))


def threshold_predictions(probabilities, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    return (np.asarray(probabilities, dtype=np.float64) >= threshold).astype(np.int64)


def roc_points(scores, labels) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(false positive rate, true positive rate, thresholds)"""
    y = _labels(labels)
    if len(np.unique(y)) < 2:
        raise EvaluationError("ROC needs both classes in the labels")
    fpr, tpr, thresholds = roc_curve(y, np.asarray(scores, dtype=np.float64), drop_intermediate=False)
    return fpr, tpr, thresholds
