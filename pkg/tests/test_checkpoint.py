import struct

import numpy as np
import pytest

from app.services import checkpoint
from app.services.network import Activation, Layer, ModelParams, init_params
from app.utils.exceptions import CheckpointError, MissingCheckpointError


@pytest.fixture
def model():
    return init_params([6, 4, 3], Activation.LEAKY_RELU, Activation.SIGMOID, np.random.default_rng(5))


class TestFormat:
    def test_header_layout(self, model):
        payload = checkpoint.to_bytes(model)
        assert payload[:4] == b"BPLY"
        assert payload[4] == 1
        assert struct.unpack("<I", payload[5:9])[0] == 2
        rows, cols, tag = struct.unpack("<IIB", payload[9:18])
        assert (rows, cols, tag) == (6, 4, int(Activation.LEAKY_RELU))
        first_weight = struct.unpack("<d", payload[18:26])[0]
        assert first_weight == model.layers[0].weight[0, 0]

    def test_size_is_shape_arithmetic(self, model):
        expected = 9 + (9 + 8 * (6 * 4 + 4)) + (9 + 8 * (4 * 3 + 3))
        assert len(checkpoint.to_bytes(model)) == expected
        assert checkpoint.serialized_size(model.signature) == expected

    def test_single_affine_layer(self):
        layer = Layer(np.zeros((3, 2)), np.zeros(2), Activation.IDENTITY)
        params = ModelParams(layers=[layer])
        assert params.parameter_count == 8
        assert len(checkpoint.to_bytes(params)) == 9 + 9 + 8 * 8


class TestSaveLoad:
    def test_restores_exact_values(self, tmp_path, model):
        path = tmp_path / "clf.bin"
        written = checkpoint.save(path, model)
        assert written == path.stat().st_size
        (restored,) = checkpoint.load(path)
        assert restored.signature == model.signature
        for a, b in zip(model.arrays(), restored.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_two_records_back_to_back(self, tmp_path, model):
        other = init_params([3, 6], Activation.IDENTITY, Activation.IDENTITY, np.random.default_rng(1))
        path = tmp_path / "ae.bin"
        checkpoint.save(path, model, other)
        encoder, decoder = checkpoint.load(path)
        assert encoder.signature == model.signature
        assert decoder.signature == other.signature

    def test_loaded_params_are_writable(self, tmp_path, model):
        path = tmp_path / "clf.bin"
        checkpoint.save(path, model)
        (restored,) = checkpoint.load(path)
        restored.layers[0].weight += 1.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingCheckpointError):
            checkpoint.load(tmp_path / "absent.bin")

    def test_bad_magic(self, tmp_path, model):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"XXXX" + checkpoint.to_bytes(model)[4:])
        with pytest.raises(CheckpointError):
            checkpoint.load(path)

    def test_truncated(self, tmp_path, model):
        path = tmp_path / "short.bin"
        path.write_bytes(checkpoint.to_bytes(model)[:-5])
        with pytest.raises(CheckpointError):
            checkpoint.load(path)

    def test_unknown_activation(self, tmp_path, model):
        payload = bytearray(checkpoint.to_bytes(model))
        payload[17] = 9
        path = tmp_path / "tag.bin"
        path.write_bytes(bytes(payload))
        with pytest.raises(CheckpointError):
            checkpoint.load(path)
