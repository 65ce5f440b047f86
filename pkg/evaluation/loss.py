"""Regularized cross-entropy over explicit probability and label matrices."""
import logging

import numpy as np

from core.exceptions import LossInputError
from core.model import LossInput

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9


def _validate(probs: np.ndarray, labels: np.ndarray, loss_input: LossInput):
    if probs.ndim != 2 or probs.shape[0] == 0 or probs.shape[1] == 0:
        raise LossInputError(f"probs must be a non-empty N x M matrix, got shape {probs.shape}")
    if labels.shape != probs.shape:
        raise LossInputError(f"labels shape {labels.shape} does not match probs shape {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs <= 0) or np.any(probs > 1):
        raise LossInputError("every probability must lie in (0, 1]")
    bad_rows = np.flatnonzero(np.abs(probs.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE)
    if bad_rows.size:
        raise LossInputError(f"probability rows {bad_rows.tolist()} do not sum to 1")
    if not np.all((labels == 0) | (labels == 1)) or np.any(labels.sum(axis=1) != 1):
        raise LossInputError("every label row must be one-hot")
    if loss_input.lambda_ < 0 or loss_input.theta_sq_norm < 0:
        raise LossInputError("lambda and theta_sq_norm must be non-negative")


def regularized_cross_entropy(loss_input: LossInput) -> float:
    """
    L = -(1/N) * sum_i sum_j y_ij * log(p_ij) + lambda * ||theta||^2

    Raises:
        LossInputError: shapes, probability range, row sums or one-hot labels are invalid.
    """
    probs = np.asarray(loss_input.probs, dtype=np.float64)
    labels = np.asarray(loss_input.labels, dtype=np.float64)
    _validate(probs, labels, loss_input)
    n_samples = probs.shape[0]
    nll = -np.sum(labels * np.log(probs)) / n_samples
    return float(nll + loss_input.lambda_ * loss_input.theta_sq_norm)
