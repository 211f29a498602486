"""
Continual training of the base classifier with replayed samples and soft targets
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.models.config import ClassifierConfig
from app.models.ledger import BatchLedger
from app.models.metrics import ClassifierLogRow, Evaluation
from app.services.losses import distill_loss, softmax, softmax_ce_loss
from app.services.network import Activation, ModelParams, backward, forward, init_params, predict
from app.services.optim import AdamState, adam_step
from app.services.replay import AutoencoderState, reconstruct_many, sample_replay
from app.utils.exceptions import (
    EmptyTestSetError,
    IndexOutOfRangeError,
    MissingSnapshotError,
    NonFiniteLossError,
    ShapeMismatchError,
)
from app.utils.logger import logger


@dataclass
class ClassifierState:
    params: ModelParams
    n_classes: int
    frozen: Optional[ModelParams] = None
    opt: Optional[AdamState] = None


def build_classifier(input_size: int, hidden: int, n_classes: int, rng: np.random.Generator) -> ClassifierState:
    params = init_params([input_size, hidden, n_classes], Activation.LEAKY_RELU, Activation.IDENTITY, rng)
    return ClassifierState(params=params, n_classes=n_classes)


def snapshot_classifier(state: ClassifierState) -> ModelParams:
    """Freeze a deep copy of the live classifier as the soft-target source"""
    state.frozen = state.params.copy()
    return state.frozen


def soft_targets(frozen: ModelParams, images: np.ndarray) -> np.ndarray:
    """Softmax of the frozen copy's logits, one distribution per image"""
    return softmax(predict(frozen, images))


def predict_classes(params: ModelParams, images: np.ndarray) -> np.ndarray:
    """Argmax of the logits; ties go to the lowest class index"""
    return np.argmax(predict(params, images), axis=1)


def preprocess_current(replay_state: AutoencoderState, indices: Sequence[int], ledger: BatchLedger) -> np.ndarray:
    """
    Replace current-batch samples by their autoencoder reconstructions

    Raises:
        IndexOutOfRangeError: If an index is outside the current batch
    """
    record = ledger.current
    indices = list(indices)
    if record is None or any(not record.contains(int(i)) for i in indices):
        raise IndexOutOfRangeError(message="Preprocessing is limited to the current batch")
    return reconstruct_many(replay_state, indices, ledger)


def replay_weight(hyper: ClassifierConfig, first: int, total: int) -> float:
    """Configured weight, or the share of past data (K-1)/N when 'auto'"""
    if hyper.replay_weight == "auto":
        return (first - 1) / total
    return float(hyper.replay_weight)


def train_batch_classifier(
    state: ClassifierState,
    replay_state: Optional[AutoencoderState],
    ledger: BatchLedger,
    images: np.ndarray,
    labels: np.ndarray,
    hyper: ClassifierConfig,
    rng: np.random.Generator,
    replay_rng: Optional[np.random.Generator] = None,
) -> List[ClassifierLogRow]:
    """
    Train on the newest batch, rehearsing past indices through the autoencoder

    Each step combines a current minibatch under cross-entropy with a replayed
    minibatch drawn uniformly from 1..K-1, supervised by the frozen copy
    (soft targets, or its argmax when soft targets are off). The loss is
    mean CE + weight * mean replay loss.

    Args:
        state: Classifier state, updated in place; holds the frozen copy
        replay_state: Trained autoencoder, or None for plain supervised training
        ledger: Ledger holding the current batch as its last record
        images: Raw current images in index order
        labels: Hard labels of the current images
        hyper: Classifier hyperparameters
        rng: Generator for minibatch shuffling
        replay_rng: Generator for replay index draws (defaults to rng)

    Returns:
        One log row per epoch

    Raises:
        MissingSnapshotError: If replay is active but no frozen copy exists
        NonFiniteLossError: If a loss becomes NaN or infinite
    """
    record = ledger.current
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if record is None or record.size != len(images) or len(labels) != len(images):
        raise ShapeMismatchError(message="Images, labels and ledger batch disagree in size")
    first, total = record.first, ledger.total
    replay_rng = replay_rng or rng

    inputs = images
    if hyper.preprocess_current and replay_state is not None:
        inputs = preprocess_current(replay_state, range(first, total + 1), ledger)

    weight = replay_weight(hyper, first, total)
    has_replay = replay_state is not None and first > 1 and hyper.replay_minibatch > 0 and weight > 0
    if has_replay and state.frozen is None:
        raise MissingSnapshotError(message="Classifier replay needs a frozen copy")

    state.opt = AdamState.for_params(state.params)
    log: List[ClassifierLogRow] = []
    for epoch in range(1, hyper.epochs + 1):
        perm = rng.permutation(len(inputs))
        ce_total = distill_total = 0.0
        correct = steps = 0
        for start in range(0, len(inputs), hyper.current_minibatch):
            idx = perm[start:start + hyper.current_minibatch]
            batch = inputs[idx]
            if has_replay:
                _, replayed = sample_replay(replay_state, hyper.replay_minibatch, first - 1, replay_rng, ledger)
                batch = np.concatenate([batch, replayed])
            logits, cache = forward(state.params, batch)
            current_logits = logits[:len(idx)]
            ce, grad_current = softmax_ce_loss(current_logits, labels[idx])
            grad = grad_current
            distill = 0.0
            if has_replay:
                teacher = soft_targets(state.frozen, batch[len(idx):])
                if hyper.soft_targets:
                    distill, grad_replay = distill_loss(logits[len(idx):], teacher)
                else:
                    distill, grad_replay = softmax_ce_loss(logits[len(idx):], np.argmax(teacher, axis=1))
                grad = np.concatenate([grad_current, weight * grad_replay])
            grads, _ = backward(state.params, cache, grad)
            _, state.opt = adam_step(state.params, grads, state.opt, hyper.learning_rate)
            ce_total += ce
            distill_total += distill
            correct += int(np.sum(np.argmax(current_logits, axis=1) == labels[idx]))
            steps += 1
        row = ClassifierLogRow(
            epoch=epoch,
            ce_loss=ce_total / steps,
            distill_loss=distill_total / steps,
            train_acc=correct / len(inputs),
        )
        for name, value in (("classifier_ce", row.ce_loss), ("classifier_distill", row.distill_loss)):
            if not np.isfinite(value):
                raise NonFiniteLossError(stage=name, epoch=epoch, value=value)
        log.append(row)
        logger.debug(
            f"[batch {record.batch}] classifier epoch {epoch}: ce={row.ce_loss:.4f} "
            f"distill={row.distill_loss:.4f} acc={row.train_acc:.3f}"
        )
    return log


def train_supervised(
    state: ClassifierState,
    images: np.ndarray,
    labels: np.ndarray,
    hyper: ClassifierConfig,
    rng: np.random.Generator,
) -> List[ClassifierLogRow]:
    """Plain minibatch cross-entropy training, the fine-tuning and joint reference"""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    state.opt = AdamState.for_params(state.params)
    log: List[ClassifierLogRow] = []
    for epoch in range(1, hyper.epochs + 1):
        perm = rng.permutation(len(images))
        ce_total, correct, steps = 0.0, 0, 0
        for start in range(0, len(images), hyper.current_minibatch):
            idx = perm[start:start + hyper.current_minibatch]
            logits, cache = forward(state.params, images[idx])
            ce, grad = softmax_ce_loss(logits, labels[idx])
            grads, _ = backward(state.params, cache, grad)
            _, state.opt = adam_step(state.params, grads, state.opt, hyper.learning_rate)
            ce_total += ce
            correct += int(np.sum(np.argmax(logits, axis=1) == labels[idx]))
            steps += 1
        if not np.isfinite(ce_total):
            raise NonFiniteLossError(stage="supervised", epoch=epoch, value=ce_total)
        log.append(ClassifierLogRow(epoch=epoch, ce_loss=ce_total / steps, distill_loss=0.0, train_acc=correct / len(images)))
    return log


def evaluate(params: ModelParams, images: np.ndarray, labels: np.ndarray) -> Evaluation:
    """
    Argmax accuracy over the whole set and per class

    Raises:
        EmptyTestSetError: If the set is empty
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise EmptyTestSetError(message="Cannot evaluate on an empty test set")
    hits = predict_classes(params, images) == labels
    per_class = {int(c): float(np.mean(hits[labels == c])) for c in np.unique(labels)}
    return Evaluation(average=float(np.mean(hits)), per_class=per_class, count=len(labels))
