"""
Dataset ingestion: big-endian IDX files (MNIST, Fashion-MNIST) and CIFAR-10 binary batches
"""
import gzip
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.models.config import ExperimentConfig
from app.services.config import data_dir
from app.utils.exceptions import (
    BadLabelError,
    BadMagicError,
    ChecksumMismatchError,
    CountMismatchError,
    NotFoundError,
    TruncatedFileError,
)
from app.utils.logger import logger

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3 * 32 * 32
N_CLASSES = 10

IDX_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_FILES = {
    "train": [f"data_batch_{k}.bin" for k in range(1, 6)],
    "test": ["test_batch.bin"],
}


@dataclass
class Dataset:
    images: np.ndarray  # (count, pixels) in [0, 1]
    labels: np.ndarray  # (count,) int64
    image_shape: Tuple[int, ...]
    sources: Dict[str, str] = field(default_factory=dict)  # path -> sha256

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, mask_or_indices) -> "Dataset":
        return Dataset(self.images[mask_or_indices], self.labels[mask_or_indices], self.image_shape, self.sources)


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    if not path.exists():
        gz = path.with_name(path.name + ".gz")
        if not gz.exists():
            raise NotFoundError(resource=f"Dataset file {path}")
        path = gz
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _header(path: Path, payload: bytes, fields: int, magic: int) -> Tuple[int, ...]:
    size = 4 * fields
    if len(payload) < size:
        raise TruncatedFileError(str(path), size, len(payload))
    values = struct.unpack(f">{fields}I", payload[:size])
    if values[0] != magic:
        raise BadMagicError(str(path), values[0], magic)
    return values


def _sha256(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _check_labels(path: Path, labels: np.ndarray) -> None:
    if labels.size and int(labels.max()) >= N_CLASSES:
        raise BadLabelError(str(path), int(labels.max()), N_CLASSES)


def load_idx(images_path: Path, labels_path: Path) -> Dataset:
    """
    Parse an IDX image file and its label file

    Images: magic 0x00000803, count, rows, cols (u32 big endian), then u8 pixels.
    Labels: magic 0x00000801, count, then u8 labels. Pixels are scaled to [0, 1].

    Raises:
        BadMagicError: If a header magic is wrong
        TruncatedFileError: If a file is shorter than its header announces
        CountMismatchError: If the files disagree on the item count
        BadLabelError: If a label is not a class id below 10
    """
    image_bytes = _read_bytes(images_path)
    label_bytes = _read_bytes(labels_path)
    _, count, rows, cols = _header(images_path, image_bytes, 4, IDX_IMAGE_MAGIC)
    _, label_count = _header(labels_path, label_bytes, 2, IDX_LABEL_MAGIC)
    if count != label_count:
        raise CountMismatchError(count, label_count)

    expected = 16 + count * rows * cols
    if len(image_bytes) < expected:
        raise TruncatedFileError(str(images_path), expected, len(image_bytes))
    if len(label_bytes) < 8 + count:
        raise TruncatedFileError(str(labels_path), 8 + count, len(label_bytes))

    pixels = np.frombuffer(image_bytes, dtype=np.uint8, count=count * rows * cols, offset=16)
    labels = np.frombuffer(label_bytes, dtype=np.uint8, count=count, offset=8).astype(np.int64)
    _check_labels(labels_path, labels)
    logger.debug(f"Loaded {count} images of {rows}x{cols} from {images_path}")
    return Dataset(
        images=pixels.reshape(count, rows * cols).astype(np.float64) / 255.0,
        labels=labels,
        image_shape=(rows, cols),
        sources={str(images_path): _sha256(image_bytes), str(labels_path): _sha256(label_bytes)},
    )


def load_cifar_binary(paths: Sequence[Path]) -> Dataset:
    """
    Parse CIFAR-10 binary batches: per record 1 label byte then 3072 channel-planar pixels

    Raises:
        TruncatedFileError: If a file is not a whole number of records
        BadLabelError: If a label is not a class id below 10
    """
    images: List[np.ndarray] = []
    labels: List[np.ndarray] = []
    sources: Dict[str, str] = {}
    for path in paths:
        payload = _read_bytes(path)
        if len(payload) % CIFAR_RECORD:
            whole = (len(payload) // CIFAR_RECORD + 1) * CIFAR_RECORD
            raise TruncatedFileError(str(path), whole, len(payload))
        records = np.frombuffer(payload, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        _check_labels(path, records[:, 0])
        labels.append(records[:, 0].astype(np.int64))
        images.append(records[:, 1:].astype(np.float64) / 255.0)
        sources[str(path)] = _sha256(payload)
    return Dataset(
        images=np.concatenate(images),
        labels=np.concatenate(labels),
        image_shape=(3, 32, 32),
        sources=sources,
    )


def read_checksums(directory: Path) -> Dict[str, str]:
    """Parse `<sha256>  <filename>` lines from SHA256SUMS when present"""
    path = Path(directory) / "SHA256SUMS"
    if not path.exists():
        return {}
    sums = {}
    for line in path.read_text().splitlines():
        parts = line.split()
        if len(parts) == 2:
            sums[parts[1].lstrip("*")] = parts[0].lower()
    return sums


def verify_checksums(dataset: Dataset, sums: Dict[str, str]) -> None:
    for path, digest in dataset.sources.items():
        expected = sums.get(Path(path).name)
        if expected is not None and expected != digest:
            raise ChecksumMismatchError(path)


def load_split(config: ExperimentConfig, split: str, directory: Optional[Path] = None) -> Dataset:
    """Load the train or test split named by the config from the data directory"""
    directory = Path(directory or data_dir(config))
    if config.data.name == "cifar10":
        dataset = load_cifar_binary([directory / name for name in CIFAR_FILES[split]])
    else:
        images_name, labels_name = IDX_FILES[split]
        dataset = load_idx(directory / images_name, directory / labels_name)
    verify_checksums(dataset, read_checksums(directory))
    if split == "test" and config.data.test_limit is not None:
        dataset = dataset.subset(slice(0, config.data.test_limit))
    logger.info(f"Loaded {config.data.name} {split}: {len(dataset)} samples from {directory}")
    return dataset
