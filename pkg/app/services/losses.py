"""
Loss functions returning (value, gradient with respect to the prediction)

Batched inputs are rows; every loss averages over rows so minibatch size does
not change the gradient scale.
"""
from typing import Tuple, Union

import numpy as np

from app.utils.exceptions import InvalidDistributionError, LabelOutOfRangeError, ShapeMismatchError

DISTRIBUTION_TOLERANCE = 1e-9


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(message=f"Shape mismatch: {a.shape} vs {b.shape}")


def _rows(x: np.ndarray) -> int:
    return 1 if x.ndim == 1 else x.shape[0]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean over all elements of (pred - target)**2"""
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    _check_same_shape(pred, target)
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def latent_reg_loss(z: np.ndarray, code: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Squared Euclidean distance ||z - c||**2

    A single vector gives the plain distance; rows give the mean distance.
    """
    z, code = np.asarray(z, dtype=np.float64), np.asarray(code, dtype=np.float64)
    _check_same_shape(z, code)
    rows = _rows(z)
    diff = z - code
    return float(np.sum(diff ** 2) / rows), 2.0 * diff / rows


def softmax_ce_loss(logits: np.ndarray, labels: Union[int, np.ndarray]) -> Tuple[float, np.ndarray]:
    """Cross-entropy of softmax(logits) against hard labels"""
    logits = np.asarray(logits, dtype=np.float64)
    batched = logits.ndim == 2
    logits2 = np.atleast_2d(logits)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n_classes = logits2.shape[1]
    if labels.shape[0] != logits2.shape[0]:
        raise ShapeMismatchError(message=f"{labels.shape[0]} labels for {logits2.shape[0]} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise LabelOutOfRangeError(message=f"Label outside 0..{n_classes - 1}")
    rows = logits2.shape[0]
    logp = log_softmax(logits2)
    loss = -float(logp[np.arange(rows), labels].sum() / rows)
    grad = np.exp(logp)
    grad[np.arange(rows), labels] -= 1.0
    grad /= rows
    return loss, grad if batched else grad[0]


def validate_distribution(probs: np.ndarray) -> None:
    if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=-1) - 1.0) > DISTRIBUTION_TOLERANCE):
        raise InvalidDistributionError(message="Target is not a probability distribution")


def distill_loss(student_logits: np.ndarray, teacher_probs: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Cross-entropy H(teacher, softmax(student)) at temperature 1

    Raises:
        InvalidDistributionError: If a teacher row is negative or does not sum to 1
    """
    student_logits = np.asarray(student_logits, dtype=np.float64)
    teacher_probs = np.asarray(teacher_probs, dtype=np.float64)
    _check_same_shape(student_logits, teacher_probs)
    validate_distribution(teacher_probs)
    rows = _rows(student_logits)
    logq = log_softmax(student_logits)
    loss = -float(np.sum(teacher_probs * logq) / rows)
    return loss, (np.exp(logq) - teacher_probs) / rows


def entropy(probs: np.ndarray) -> float:
    """Mean entropy over rows, with 0 log 0 = 0"""
    probs = np.asarray(probs, dtype=np.float64)
    safe = np.where(probs > 0, probs, 1.0)
    return -float(np.sum(probs * np.log(safe)) / _rows(probs))
