import gzip
import hashlib
import struct

import numpy as np
import pytest

from app.services.config import parse_config
from app.services.datasets import (
    CIFAR_RECORD,
    load_cifar_binary,
    load_idx,
    load_split,
    read_checksums,
)
from app.services.scenario import build_scenario, group_name
from app.utils.exceptions import (
    BadLabelError,
    BadMagicError,
    ChecksumMismatchError,
    CountMismatchError,
    InvalidScenarioError,
    NotFoundError,
    TruncatedFileError,
)
from tests.conftest import synthetic_dataset, write_idx

TRAIN = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
TEST = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


@pytest.fixture
def idx_pair(tmp_path):
    pixels = np.arange(3 * 16, dtype=np.uint8).reshape(3, 16) * 5
    return write_idx(tmp_path, *TRAIN, pixels, [7, 0, 9]), pixels


class TestIdx:
    def test_parses_images_and_labels(self, idx_pair):
        (images_path, labels_path), pixels = idx_pair
        data = load_idx(images_path, labels_path)
        assert data.images.shape == (3, 16)
        assert data.image_shape == (4, 4)
        np.testing.assert_allclose(data.images, pixels / 255.0)
        assert data.labels.tolist() == [7, 0, 9]
        assert data.sources[str(images_path)] == hashlib.sha256(images_path.read_bytes()).hexdigest()

    def test_bad_magic_names_the_value(self, idx_pair):
        (images_path, labels_path), _ = idx_pair
        payload = bytearray(images_path.read_bytes())
        payload[:4] = struct.pack(">I", 0x0000BEEF)
        images_path.write_bytes(bytes(payload))
        with pytest.raises(BadMagicError) as err:
            load_idx(images_path, labels_path)
        assert "0x0000beef" in err.value.message.lower()
        assert err.value.error_code == "BAD_MAGIC"

    def test_truncated_pixels(self, idx_pair):
        (images_path, labels_path), _ = idx_pair
        images_path.write_bytes(images_path.read_bytes()[:-1])
        with pytest.raises(TruncatedFileError):
            load_idx(images_path, labels_path)

    def test_truncated_header(self, idx_pair):
        (images_path, labels_path), _ = idx_pair
        images_path.write_bytes(images_path.read_bytes()[:10])
        with pytest.raises(TruncatedFileError):
            load_idx(images_path, labels_path)

    def test_count_mismatch(self, tmp_path):
        images_path, labels_path = write_idx(tmp_path, *TRAIN, np.zeros((3, 16)), [1, 2])
        with pytest.raises(CountMismatchError):
            load_idx(images_path, labels_path)

    def test_label_above_class_range(self, tmp_path):
        images_path, labels_path = write_idx(tmp_path, *TRAIN, np.zeros((2, 16)), [3, 200])
        with pytest.raises(BadLabelError) as err:
            load_idx(images_path, labels_path)
        assert err.value.error_code == "BAD_LABEL"
        assert err.value.value == 200

    def test_reads_gzip_when_raw_is_absent(self, idx_pair):
        (images_path, labels_path), pixels = idx_pair
        for path in (images_path, labels_path):
            path.with_name(path.name + ".gz").write_bytes(gzip.compress(path.read_bytes()))
            path.unlink()
        data = load_idx(images_path, labels_path)
        np.testing.assert_allclose(data.images, pixels / 255.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_idx(tmp_path / "nope", tmp_path / "nada")


class TestCifar:
    def test_parses_records(self, tmp_path):
        records = np.zeros((2, CIFAR_RECORD), dtype=np.uint8)
        records[:, 0] = [3, 8]
        records[1, 1:] = 255
        path = tmp_path / "data_batch_1.bin"
        path.write_bytes(records.tobytes())
        data = load_cifar_binary([path])
        assert data.image_shape == (3, 32, 32)
        assert data.labels.tolist() == [3, 8]
        assert data.images.shape == (2, 3072)
        assert data.images[1].min() == 1.0

    def test_label_above_class_range(self, tmp_path):
        records = np.zeros((1, CIFAR_RECORD), dtype=np.uint8)
        records[0, 0] = 10
        path = tmp_path / "data_batch_1.bin"
        path.write_bytes(records.tobytes())
        with pytest.raises(BadLabelError):
            load_cifar_binary([path])

    def test_partial_record(self, tmp_path):
        path = tmp_path / "test_batch.bin"
        path.write_bytes(bytes(CIFAR_RECORD + 10))
        with pytest.raises(TruncatedFileError):
            load_cifar_binary([path])


class TestLoadSplit:
    def _write_split(self, directory):
        rng = np.random.default_rng(0)
        write_idx(directory, *TRAIN, rng.integers(0, 256, size=(6, 16)), [0, 1, 2, 0, 1, 2])
        write_idx(directory, *TEST, rng.integers(0, 256, size=(4, 16)), [0, 1, 2, 3])

    def test_reads_from_config_dir_and_limits_test(self, tmp_path):
        self._write_split(tmp_path)
        config = parse_config({"data.dir": str(tmp_path), "data.test_limit": "2"})
        assert len(load_split(config, "train")) == 6
        assert len(load_split(config, "test")) == 2

    def test_checksums_verified(self, tmp_path):
        self._write_split(tmp_path)
        good = hashlib.sha256((tmp_path / TRAIN[0]).read_bytes()).hexdigest()
        (tmp_path / "SHA256SUMS").write_text(f"{good}  {TRAIN[0]}\n{'0' * 64}  {TRAIN[1]}\n")
        assert read_checksums(tmp_path)[TRAIN[0]] == good
        config = parse_config({"data.dir": str(tmp_path)})
        with pytest.raises(ChecksumMismatchError):
            load_split(config, "train")

    def test_data_dir_from_environment(self, tmp_path, monkeypatch):
        self._write_split(tmp_path)
        monkeypatch.setenv("BINPLAY_DATA", str(tmp_path))
        assert len(load_split(parse_config({}), "test")) == 4


class TestScenario:
    def test_batches_hold_only_their_classes(self):
        data = synthetic_dataset(8)
        scenario, batches = build_scenario(data, [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]], 5, seed=0)
        assert set(batches[0].labels.tolist()) == {0, 1}
        assert all(len(b) == 10 for b in batches)
        for b, group in zip(batches, [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]]):
            assert sorted(np.unique(b.labels).tolist()) == group
            assert all(np.sum(b.labels == c) == 5 for c in group)

    def test_global_indices_are_chronological(self):
        scenario, _ = build_scenario(synthetic_dataset(4), [[0, 1], [2, 3]], 3, seed=0)
        assert [b.first_index for b in scenario.batches] == [1, 7]
        assert scenario.classes == [0, 1, 2, 3]

    def test_same_seed_same_selection(self):
        data = synthetic_dataset(8)
        _, a = build_scenario(data, [[0, 1], [2, 3]], 4, seed=3)
        _, b = build_scenario(data, [[0, 1], [2, 3]], 4, seed=3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.images, y.images)
            np.testing.assert_array_equal(x.labels, y.labels)

    def test_no_cap_keeps_everything(self):
        _, batches = build_scenario(synthetic_dataset(4), [[0], [1]], None, seed=0)
        assert [len(b) for b in batches] == [4, 4]

    def test_cap_above_available(self):
        with pytest.raises(InvalidScenarioError):
            build_scenario(synthetic_dataset(4), [[0, 1]], 5, seed=0)

    def test_overlapping_groups(self):
        with pytest.raises(InvalidScenarioError):
            build_scenario(synthetic_dataset(4), [[0, 1], [1, 2]], 2, seed=0)

    def test_group_name(self):
        assert group_name([0, 1]) == "c01"
        assert group_name([8, 9]) == "c89"
