import gzip
import struct

import numpy as np
import pytest

from credlabel import data_io


def idx_image_bytes(images):
    """Serialize an (N, rows, cols) uint8 array into IDX image bytes."""
    n, rows, cols = images.shape
    header = struct.pack(">IIII", data_io.IMAGE_MAGIC, n, rows, cols)
    return header + images.tobytes()


def idx_label_bytes(labels):
    header = struct.pack(">II", data_io.LABEL_MAGIC, len(labels))
    return header + bytes(labels)


@pytest.fixture
def two_image_file(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(2, 4, 3), dtype=np.uint8)
    path = tmp_path / "imgs-idx3-ubyte"
    path.write_bytes(idx_image_bytes(images))
    return path, images


class TestLoadIdx:
    def test_image_roundtrip(self, two_image_file):
        path, images = two_image_file
        loaded = data_io.load_idx(path)
        np.testing.assert_array_equal(loaded, images)
        flat = data_io.load_idx_images(path)
        assert flat.shape == (2, 12)

    def test_label_roundtrip(self, tmp_path):
        path = tmp_path / "labels-idx1-ubyte"
        path.write_bytes(idx_label_bytes([3, 1, 4, 1, 5]))
        np.testing.assert_array_equal(data_io.load_idx(path), [3, 1, 4, 1, 5])

    def test_gzip_transparent(self, tmp_path, two_image_file):
        _, images = two_image_file
        path = tmp_path / "imgs-idx3-ubyte.gz"
        with gzip.open(path, "wb") as f:
            f.write(idx_image_bytes(images))
        np.testing.assert_array_equal(data_io.load_idx(path), images)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(struct.pack(">IIII", 0xDEADBEEF, 1, 2, 2) + b"\x00" * 4)
        with pytest.raises(data_io.BadMagicError):
            data_io.load_idx(path)

    def test_truncated_payload(self, tmp_path, two_image_file):
        _, images = two_image_file
        path = tmp_path / "short"
        path.write_bytes(idx_image_bytes(images)[:-5])
        with pytest.raises(data_io.TruncatedFileError, match="promises"):
            data_io.load_idx(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "stub"
        path.write_bytes(struct.pack(">I", data_io.IMAGE_MAGIC) + b"\x00\x00")
        with pytest.raises(data_io.TruncatedFileError, match="header"):
            data_io.load_idx(path)

    def test_trailing_bytes(self, tmp_path, two_image_file):
        _, images = two_image_file
        path = tmp_path / "long"
        path.write_bytes(idx_image_bytes(images) + b"\x00\x00\x00")
        with pytest.raises(data_io.DimensionMismatchError, match="trailing"):
            data_io.load_idx(path)

    def test_zero_dimension(self, tmp_path):
        path = tmp_path / "zero"
        path.write_bytes(struct.pack(">IIII", data_io.IMAGE_MAGIC, 0, 28, 28))
        with pytest.raises(data_io.DimensionMismatchError, match="zero"):
            data_io.load_idx(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            data_io.load_idx(tmp_path / "nope")

    def test_labels_rejected_as_images(self, tmp_path):
        path = tmp_path / "labels-idx1-ubyte"
        path.write_bytes(idx_label_bytes([1, 2]))
        with pytest.raises(data_io.DimensionMismatchError, match="image"):
            data_io.load_idx_images(path)


class TestNormalizeAndSplit:
    def test_byte_scaling(self):
        raw = np.array([[0, 128, 255]], dtype=np.uint8).repeat(10, axis=0)
        train, test = data_io.normalize_and_split(raw, seed=0, n_test=3)
        assert train.X.min() == 0.0
        assert train.X.max() == 1.0
        assert np.all((0 <= train.X) & (train.X <= 1))

    def test_disjoint_split_and_counts(self):
        raw = np.arange(50, dtype=np.uint8).reshape(50, 1).repeat(4, axis=1)
        train, test = data_io.normalize_and_split(raw, seed=1, n_test=10)
        assert train.count == 40 and test.count == 10
        train_vals = set(np.round(train.X[:, 0] * 255).astype(int))
        test_vals = set(np.round(test.X[:, 0] * 255).astype(int))
        assert train_vals.isdisjoint(test_vals)

    def test_deterministic(self):
        raw = np.random.default_rng(2).integers(0, 256, size=(30, 5), dtype=np.uint8)
        a_train, a_test = data_io.normalize_and_split(raw, seed=3, n_test=5)
        b_train, b_test = data_io.normalize_and_split(raw, seed=3, n_test=5)
        np.testing.assert_array_equal(a_train.X, b_train.X)
        np.testing.assert_array_equal(a_test.X, b_test.X)

    def test_bad_n_test(self):
        raw = np.zeros((5, 2), dtype=np.uint8)
        with pytest.raises(ValueError):
            data_io.normalize_and_split(raw, seed=0, n_test=5)


class TestSubsamplePool:
    def test_no_duplicates_and_seeded(self):
        raw = np.arange(100, dtype=np.uint8).reshape(100, 1)
        train, _ = data_io.normalize_and_split(raw, seed=4, n_test=20)
        pool_a = data_io.subsample_pool(train, 30, seed=5)
        pool_b = data_io.subsample_pool(train, 30, seed=5)
        np.testing.assert_array_equal(pool_a.X, pool_b.X)
        vals = np.round(pool_a.X[:, 0] * 255).astype(int)
        assert len(set(vals)) == 30

    def test_oversized_pool_rejected(self):
        raw = np.zeros((20, 2), dtype=np.uint8)
        train, _ = data_io.normalize_and_split(raw, seed=6, n_test=5)
        with pytest.raises(ValueError, match="exceeds"):
            data_io.subsample_pool(train, 16, seed=7)


class TestCsvRoundTrip:
    def test_values_survive(self, tmp_path):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        path = tmp_path / "pool.csv"
        data_io.export_pool_csv(path, X, y)
        X2, y2 = data_io.load_pool_csv(path)
        np.testing.assert_allclose(X2, X, atol=1e-9)
        np.testing.assert_allclose(y2, y, atol=1e-9)

    def test_without_labels(self, tmp_path):
        X = np.eye(3)
        path = tmp_path / "pool.csv"
        data_io.export_pool_csv(path, X)
        X2, y2 = data_io.load_pool_csv(path)
        np.testing.assert_array_equal(X2, X)
        assert y2 is None
