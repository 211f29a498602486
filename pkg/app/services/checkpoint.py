"""
Binary checkpoint format for ModelParams

Layout (little endian): b"BPLY", version u8, layer count u32, then per layer
rows u32, cols u32, activation u8, weights f64[rows*cols], biases f64[cols].
"""
import io
import struct
from pathlib import Path
from typing import BinaryIO, List, Sequence

import numpy as np

from app.services.network import Activation, Layer, ModelParams
from app.utils.exceptions import CheckpointError, MissingCheckpointError

MAGIC = b"BPLY"
VERSION = 1
_HEADER = struct.Struct("<4sBI")
_LAYER = struct.Struct("<IIB")


def serialized_size(signature: Sequence[Sequence[int]]) -> int:
    """Byte length of a checkpoint record for a shape signature [(rows, cols, tag), ...]"""
    size = _HEADER.size
    for rows, cols, _ in signature:
        size += _LAYER.size + 8 * (rows * cols + cols)
    return size


def to_bytes(params: ModelParams) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, len(params.layers))]
    for layer in params.layers:
        rows, cols = layer.weight.shape
        parts.append(_LAYER.pack(rows, cols, int(layer.activation)))
        parts.append(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def _read_exact(stream: BinaryIO, size: int) -> bytes:
    data = stream.read(size)
    if len(data) != size:
        raise CheckpointError(message=f"Truncated checkpoint: wanted {size} bytes, got {len(data)}")
    return data


def read_params(stream: BinaryIO) -> ModelParams:
    magic, version, count = _HEADER.unpack(_read_exact(stream, _HEADER.size))
    if magic != MAGIC:
        raise CheckpointError(message=f"Bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(message=f"Unsupported checkpoint version {version}")
    layers = []
    for _ in range(count):
        rows, cols, tag = _LAYER.unpack(_read_exact(stream, _LAYER.size))
        try:
            activation = Activation(tag)
        except ValueError:
            raise CheckpointError(message=f"Unknown activation tag {tag}")
        weight = np.frombuffer(_read_exact(stream, 8 * rows * cols), dtype="<f8").reshape(rows, cols)
        bias = np.frombuffer(_read_exact(stream, 8 * cols), dtype="<f8")
        layers.append(Layer(weight=weight.astype(np.float64), bias=bias.astype(np.float64), activation=activation))
    return ModelParams(layers=layers)


def save(path: Path, *models: ModelParams) -> int:
    """Write one or more records back to back; returns the byte count"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = b"".join(to_bytes(m) for m in models)
    path.write_bytes(payload)
    return len(payload)


def load(path: Path) -> List[ModelParams]:
    """Read every record stored in a checkpoint file"""
    path = Path(path)
    if not path.exists():
        raise MissingCheckpointError(str(path))
    payload = path.read_bytes()
    stream = io.BytesIO(payload)
    models = []
    while stream.tell() < len(payload):
        models.append(read_params(stream))
    return models
