"""Shared fixtures: a tiny code layout, synthetic separable images and IDX writers."""

import struct
from pathlib import Path

import numpy as np
import pytest

from app.models.config import ExperimentConfig
from app.models.ledger import BatchLedger
from app.services.codes import make_layout
from app.services.config import parse_config
from app.services.datasets import Dataset
from app.services.experiment import ExperimentData
from app.services.replay import build_autoencoder, reconstruct_many, train_batch

IMAGE_SHAPE = (4, 4)
PIXELS = IMAGE_SHAPE[0] * IMAGE_SHAPE[1]


def synthetic_images(labels, rng, noise=0.05):
    """Class c lights up pixels c and c + 6; everything else stays dark."""
    labels = np.asarray(labels, dtype=np.int64)
    images = rng.uniform(0.0, noise, size=(len(labels), PIXELS))
    images[np.arange(len(labels)), labels] = 0.9
    images[np.arange(len(labels)), labels + 6] = 0.8
    return images


def synthetic_dataset(per_class, seed=0, classes=range(10)):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.asarray(list(classes)), per_class)
    labels = labels[rng.permutation(len(labels))]
    return Dataset(images=synthetic_images(labels, rng), labels=labels, image_shape=IMAGE_SHAPE)


def write_idx(directory: Path, images_name: str, labels_name: str, images: np.ndarray, labels: np.ndarray, rows=4, cols=4):
    """Write big-endian IDX files from pixel bytes and labels."""
    directory.mkdir(parents=True, exist_ok=True)
    pixels = np.asarray(images, dtype=np.uint8)
    (directory / images_name).write_bytes(struct.pack(">IIII", 0x803, len(pixels), rows, cols) + pixels.tobytes())
    (directory / labels_name).write_bytes(
        struct.pack(">II", 0x801, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()
    )
    return directory / images_name, directory / labels_name


@pytest.fixture
def tiny_layout():
    # prefix 4 bits + two 6-bit index subvectors: n = 16, capacity 64
    return make_layout(6, [3, 5], 4, 3)


@pytest.fixture
def tiny_config(tmp_path) -> ExperimentConfig:
    return parse_config({
        "scenario.class_groups": "0 1, 2 3, 4 5",
        "scenario.per_class_cap": "6",
        "codes.index_bits": "6",
        "codes.index_primes": "3, 5",
        "codes.prefix_bits": "4",
        "codes.prefix_prime": "3",
        "autoencoder.hidden": "12",
        "autoencoder.warmup_epochs": "2",
        "autoencoder.assign_epoch_cap": "4",
        "autoencoder.stable_window": "2",
        "autoencoder.decoder_epochs": "3",
        "autoencoder.minibatch": "8",
        "autoencoder.learning_rate": "0.01",
        "classifier.hidden": "8",
        "classifier.epochs": "2",
        "classifier.current_minibatch": "4",
        "classifier.replay_minibatch": "4",
        "classifier.learning_rate": "0.01",
        "run.seed": "7",
        "run.out": str(tmp_path / "run"),
    })


@pytest.fixture
def tiny_data() -> ExperimentData:
    return ExperimentData(train=synthetic_dataset(10, seed=1), test=synthetic_dataset(3, seed=2))


@pytest.fixture
def two_batch_setup(tiny_config, tiny_layout):
    """Autoencoder trained on classes {0,1} then {2,3}, with batch-1 reconstructions taken in between."""
    first = synthetic_dataset(5, seed=3, classes=[0, 1])
    second = synthetic_dataset(5, seed=4, classes=[2, 3])
    rng = np.random.default_rng(11)
    state = build_autoencoder(PIXELS, tiny_layout, 12, np.random.default_rng(10))
    ledger = BatchLedger()
    ledger.register(len(first), [0, 1])
    first_result = train_batch(state, first.images, ledger, tiny_config.autoencoder, rng)
    before = reconstruct_many(state, range(1, 11), ledger)
    ledger.register(len(second), [2, 3])
    second_result = train_batch(state, second.images, ledger, tiny_config.autoencoder, rng)
    return {
        "state": state,
        "ledger": ledger,
        "batches": [first, second],
        "results": [first_result, second_result],
        "before": before,
    }
