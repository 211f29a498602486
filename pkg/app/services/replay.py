"""
Binary latent autoencoder: per-batch training with self-rehearsal and
on-the-fly regeneration of past samples from recomputed codes
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from app.models.codes import CodeLayout
from app.models.config import AutoencoderConfig
from app.models.ledger import BatchLedger, BatchRecord
from app.models.metrics import AutoencoderLogRow
from app.services.assign import Assignment, greedy_assign, is_stable, shuffle_order
from app.services.codes import codebook, full_code
from app.services.losses import latent_reg_loss, mse_loss
from app.services.network import Activation, ModelParams, backward, forward, init_params, predict
from app.services.optim import AdamState, adam_step
from app.utils.exceptions import (
    IndexOutOfRangeError,
    MissingSnapshotError,
    NonFiniteLossError,
    SizeMismatchError,
)
from app.utils.logger import logger


@dataclass
class TrainingPair:
    code: np.ndarray
    target: np.ndarray


@dataclass
class AutoencoderState:
    encoder: ModelParams
    decoder: ModelParams
    layout: CodeLayout
    # batch -> codebook row of each sample position, frozen after assignment
    assignments: Dict[int, np.ndarray] = field(default_factory=dict)
    decoder_snapshot: Optional[ModelParams] = None
    encoder_opt: Optional[AdamState] = None
    decoder_opt: Optional[AdamState] = None
    _code_cache: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def image_size(self) -> int:
        return self.decoder.output_size

    def clear_code_cache(self) -> None:
        self._code_cache.clear()


@dataclass
class BatchTrainingResult:
    log: List[AutoencoderLogRow]
    assignment: Assignment
    recon_mse: float
    drift_mse: Optional[float]


def build_autoencoder(image_size: int, layout: CodeLayout, hidden: int, rng: np.random.Generator) -> AutoencoderState:
    """Encoder image->hidden->n (identity out), decoder n->hidden->image (logistic out)"""
    encoder = init_params([image_size, hidden, layout.length], Activation.LEAKY_RELU, Activation.IDENTITY, rng)
    decoder = init_params([layout.length, hidden, image_size], Activation.LEAKY_RELU, Activation.SIGMOID, rng)
    return AutoencoderState(encoder=encoder, decoder=decoder, layout=layout)


def snapshot_decoder(state: AutoencoderState) -> ModelParams:
    """Freeze a deep copy of the decoder as the source of replayed targets"""
    state.decoder_snapshot = state.decoder.copy()
    return state.decoder_snapshot


def _record_for(ledger: BatchLedger, i: int) -> BatchRecord:
    try:
        return ledger.batch_of(i)
    except IndexError:
        raise IndexOutOfRangeError(message=f"Index {i} outside 1..{ledger.total}")


def code_for(state: AutoencoderState, i: int, ledger: BatchLedger) -> np.ndarray:
    """
    Recompute the decoder input for sample i

    Samples of a batch with a frozen assignment use their assigned code;
    otherwise the index's own code c(i).
    """
    cached = state._code_cache.get(i)
    if cached is not None:
        return cached
    record = _record_for(ledger, i)
    assigned = state.assignments.get(record.batch)
    if assigned is None:
        return full_code(record.batch, i, state.layout)
    code = full_code(record.batch, record.first + int(assigned[i - record.first]), state.layout)
    state._code_cache[i] = code
    return code


def codes_for(state: AutoencoderState, indices: Iterable[int], ledger: BatchLedger) -> np.ndarray:
    rows = [code_for(state, int(i), ledger) for i in indices]
    if not rows:
        return np.zeros((0, state.layout.length))
    return np.stack(rows)


def make_training_pair(
    i: int,
    ledger: BatchLedger,
    current_images: np.ndarray,
    state: AutoencoderState,
) -> TrainingPair:
    """
    Pair for index i: replayed from the snapshot below K, real data from K to N

    Raises:
        IndexOutOfRangeError: If i is outside 1..N
        MissingSnapshotError: If i < K and no decoder snapshot exists
    """
    codes, targets = training_pairs([i], ledger, current_images, state)
    return TrainingPair(code=codes[0], target=targets[0])


def training_pairs(
    indices: Iterable[int],
    ledger: BatchLedger,
    current_images: np.ndarray,
    state: AutoencoderState,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stacked codes and targets for many indices, with the same sources as make_training_pair

    Raises:
        IndexOutOfRangeError: If an index is outside 1..N
        MissingSnapshotError: If an index is below K and no decoder snapshot exists
    """
    record = ledger.current
    idx = np.asarray(list(indices), dtype=np.int64)
    outside = idx[(idx < 1) | (idx > ledger.total)]
    if outside.size:
        raise IndexOutOfRangeError(message=f"Index {int(outside[0])} outside 1..{ledger.total}")
    if record is None:
        raise IndexOutOfRangeError(message="Ledger holds no batch")
    codes = codes_for(state, idx, ledger)
    targets = np.empty((len(idx), state.image_size))
    past = idx < record.first
    if past.any():
        if state.decoder_snapshot is None:
            raise MissingSnapshotError(
                message=f"Replayed pair for index {int(idx[past][0])} needs a decoder snapshot"
            )
        targets[past] = predict(state.decoder_snapshot, codes[past])
    targets[~past] = np.asarray(current_images, dtype=np.float64)[idx[~past] - record.first]
    return codes, targets


def _check_finite(stage: str, epoch: int, *values: float) -> None:
    for value in values:
        if not np.isfinite(value):
            logger.error(f"Non-finite loss in {stage} epoch {epoch}", extra={"value": value})
            raise NonFiniteLossError(stage=stage, epoch=epoch, value=value)


def _autoencoder_epoch(
    state: AutoencoderState,
    images: np.ndarray,
    code_targets: Optional[np.ndarray],
    hyper: AutoencoderConfig,
    rng: np.random.Generator,
) -> Tuple[float, float]:
    """One pass of encoder+decoder training; latent regularization only when targets are given"""
    perm = rng.permutation(len(images))
    recon_total = reg_total = 0.0
    for start in range(0, len(images), hyper.minibatch):
        idx = perm[start:start + hyper.minibatch]
        x = images[idx]
        z, enc_cache = forward(state.encoder, x)
        out, dec_cache = forward(state.decoder, z)
        recon, grad_out = mse_loss(out, x)
        dec_grads, grad_z = backward(state.decoder, dec_cache, grad_out)
        reg = 0.0
        if code_targets is not None and hyper.reg_weight > 0:
            reg, grad_reg = latent_reg_loss(z, code_targets[idx])
            grad_z = grad_z + hyper.reg_weight * grad_reg
        enc_grads, _ = backward(state.encoder, enc_cache, grad_z)
        _, state.encoder_opt = adam_step(state.encoder, enc_grads, state.encoder_opt, hyper.learning_rate)
        _, state.decoder_opt = adam_step(state.decoder, dec_grads, state.decoder_opt, hyper.learning_rate)
        recon_total += recon * len(idx)
        reg_total += reg * len(idx)
    return recon_total / len(images), reg_total / len(images)


def _decoder_epoch(
    state: AutoencoderState,
    codes: np.ndarray,
    targets: np.ndarray,
    hyper: AutoencoderConfig,
    rng: np.random.Generator,
) -> float:
    """Shuffled full pass over every index 1..N, decoder weights only"""
    perm = rng.permutation(len(codes))
    total = 0.0
    for start in range(0, len(codes), hyper.minibatch):
        idx = perm[start:start + hyper.minibatch]
        out, cache = forward(state.decoder, codes[idx])
        loss, grad_out = mse_loss(out, targets[idx])
        grads, _ = backward(state.decoder, cache, grad_out)
        _, state.decoder_opt = adam_step(state.decoder, grads, state.decoder_opt, hyper.learning_rate)
        total += loss * len(idx)
    return total / len(codes)


def train_batch(
    state: AutoencoderState,
    batch_images: np.ndarray,
    ledger: BatchLedger,
    hyper: AutoencoderConfig,
    rng: np.random.Generator,
) -> BatchTrainingResult:
    """
    Train the autoencoder on the newest ledger batch

    Warm-up trains on reconstruction only, assignment epochs add the latent
    regularization toward greedily assigned codes until the map is stable,
    and the decoder phase trains on real pairs mixed with pairs replayed
    from the frozen decoder snapshot.

    Args:
        state: Autoencoder state, updated in place
        batch_images: The new batch, one flattened image per row, in index order
        ledger: Ledger already holding the new batch
        hyper: Autoencoder hyperparameters
        rng: Training generator

    Returns:
        BatchTrainingResult with per-phase loss curves and the frozen assignment

    Raises:
        SizeMismatchError: If the ledger batch size differs from the images
        NonFiniteLossError: If any loss becomes NaN or infinite
    """
    record = ledger.current
    images = np.asarray(batch_images, dtype=np.float64)
    if record is None or len(images) == 0 or record.size != len(images):
        raise SizeMismatchError(message=f"Ledger batch size does not match {len(images)} images")
    first, total = record.first, ledger.total
    snapshot = snapshot_decoder(state) if first > 1 else None
    state.encoder_opt = AdamState.for_params(state.encoder)
    state.decoder_opt = AdamState.for_params(state.decoder)
    log: List[AutoencoderLogRow] = []

    for epoch in range(1, hyper.warmup_epochs + 1):
        recon, _ = _autoencoder_epoch(state, images, None, hyper, rng)
        _check_finite("warmup", epoch, recon)
        log.append(AutoencoderLogRow(phase="warmup", epoch=epoch, recon_mse=recon, reg_loss=0.0))
        logger.debug(f"[batch {record.batch}] warmup epoch {epoch}: recon={recon:.5f}")

    book = codebook(record.batch, first, total, state.layout)
    history: List[Assignment] = []
    for epoch in range(1, hyper.assign_epoch_cap + 1):
        latents = predict(state.encoder, images)
        history.append(greedy_assign(latents, book, shuffle_order(len(images), rng)))
        recon, reg = _autoencoder_epoch(state, images, book[history[-1].codes], hyper, rng)
        _check_finite("assign", epoch, recon, reg)
        log.append(AutoencoderLogRow(phase="assign", epoch=epoch, recon_mse=recon, reg_loss=reg))
        logger.debug(f"[batch {record.batch}] assign epoch {epoch}: recon={recon:.5f} reg={reg:.4f}")
        if is_stable(history, hyper.stable_window):
            break
    frozen = history[-1]
    state.assignments[record.batch] = frozen.codes.copy()
    state.clear_code_cache()
    logger.info(
        f"[batch {record.batch}] assignment frozen after {len(history)} epochs",
        extra={"stable": is_stable(history, hyper.stable_window), "total_distance": frozen.total_loss},
    )

    codes, targets = training_pairs(range(1, total + 1), ledger, images, state)
    for epoch in range(1, hyper.decoder_epochs + 1):
        recon = _decoder_epoch(state, codes, targets, hyper, rng)
        _check_finite("decoder", epoch, recon)
        log.append(AutoencoderLogRow(phase="decoder", epoch=epoch, recon_mse=recon, reg_loss=0.0))
        logger.debug(f"[batch {record.batch}] decoder epoch {epoch}: recon={recon:.5f}")

    current_recon = float(np.mean((predict(state.decoder, codes[first - 1:]) - images) ** 2))
    drift = None
    if snapshot is not None:
        past = codes[:first - 1]
        drift = float(np.mean((predict(state.decoder, past) - predict(snapshot, past)) ** 2))
    state.decoder_snapshot = None
    logger.info(
        f"[batch {record.batch}] autoencoder trained: recon_mse={current_recon:.5f}"
        + (f" drift_mse={drift:.5f}" if drift is not None else "")
    )
    return BatchTrainingResult(log=log, assignment=frozen, recon_mse=current_recon, drift_mse=drift)


def reconstruct(state: AutoencoderState, i: int, ledger: BatchLedger) -> np.ndarray:
    """
    Decode sample i from its recomputed code

    Raises:
        IndexOutOfRangeError: If i is outside 1..N
    """
    return predict(state.decoder, code_for(state, i, ledger))[0]


def reconstruct_many(state: AutoencoderState, indices: Iterable[int], ledger: BatchLedger) -> np.ndarray:
    codes = codes_for(state, indices, ledger)
    if len(codes) == 0:
        return np.zeros((0, state.image_size))
    return predict(state.decoder, codes)


def sample_replay(
    state: AutoencoderState,
    count: int,
    upper: int,
    rng: np.random.Generator,
    ledger: BatchLedger,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw `count` indices uniformly with replacement from 1..upper and decode them

    Returns:
        Tuple of (indices, images), row k of images being the decode of indices[k]

    Raises:
        IndexOutOfRangeError: If upper exceeds N, or upper < 1 while count > 0
    """
    if upper > ledger.total or (count > 0 and upper < 1):
        raise IndexOutOfRangeError(message=f"Replay bound {upper} outside 1..{ledger.total}")
    if count == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, state.image_size))
    indices = rng.integers(1, upper + 1, size=count)
    return indices, reconstruct_many(state, indices, ledger)
