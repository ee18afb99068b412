"""IDX image ingestion, normalization, splitting, and CSV export.

IDX container layout (big endian): a 4-byte magic whose last two bytes
encode the element type (0x08 = unsigned byte) and the number of
dimensions, one 4-byte size per dimension, then the raw elements.
Image files carry magic 0x00000803, label files 0x00000801. Files ending
in ``.gz`` are decompressed transparently.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Base class for malformed IDX containers."""


class BadMagicError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class DimensionMismatchError(IdxFormatError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Flattened image matrix with entries normalized into [0, 1]."""

    X: np.ndarray
    source: str
    split: str
    count: int

    def __post_init__(self):
        if self.X.shape[0] != self.count:
            raise ValueError("count does not match the number of rows")
        self.X.setflags(write=False)


def _open_maybe_gzip(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def load_idx(path) -> np.ndarray:
    """Read one IDX file; returns (N, rows, cols) images or (N,) labels."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such IDX file: {path}")
    with _open_maybe_gzip(path) as f:
        header = f.read(4)
        if len(header) < 4:
            raise TruncatedFileError(f"{path}: file shorter than the 4-byte magic")
        (magic,) = struct.unpack(">I", header)
        if magic == IMAGE_MAGIC:
            ndim = 3
        elif magic == LABEL_MAGIC:
            ndim = 1
        else:
            raise BadMagicError(
                f"{path}: magic 0x{magic:08x} is neither image (0x{IMAGE_MAGIC:08x}) "
                f"nor label (0x{LABEL_MAGIC:08x})"
            )
        dim_bytes = f.read(4 * ndim)
        if len(dim_bytes) < 4 * ndim:
            raise TruncatedFileError(f"{path}: header ends before all {ndim} dims")
        dims = struct.unpack(f">{ndim}I", dim_bytes)
        if any(d == 0 for d in dims):
            raise DimensionMismatchError(f"{path}: zero-sized dimension in header {dims}")
        expected = int(np.prod(dims))
        payload = f.read()
        if len(payload) < expected:
            raise TruncatedFileError(
                f"{path}: header promises {expected} bytes, file holds {len(payload)}"
            )
        if len(payload) > expected:
            raise DimensionMismatchError(
                f"{path}: {len(payload) - expected} trailing bytes beyond header dims {dims}"
            )
        data = np.frombuffer(payload, dtype=np.uint8)
        return data.reshape(dims)


def load_idx_images(path) -> np.ndarray:
    """Images as an N x (rows*cols) byte matrix."""
    raw = load_idx(path)
    if raw.ndim != 3:
        raise DimensionMismatchError(f"{path} is not an image file")
    return raw.reshape(raw.shape[0], -1)


def normalize_and_split(
    raw: np.ndarray, seed: int, n_test: int = 10000, source: str = "mnist"
) -> tuple[Dataset, Dataset]:
    """Scale bytes by 1/255 and split into disjoint train/test at random."""
    raw = np.asarray(raw)
    if raw.ndim == 3:
        raw = raw.reshape(raw.shape[0], -1)
    n = raw.shape[0]
    if not (0 < n_test < n):
        raise ValueError(f"n_test must lie in (0, {n}), got {n_test}")
    X = raw.astype(np.float64) / 255.0
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError("normalized entries left [0, 1]; input was not byte-valued")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = Dataset(X[train_idx].copy(), source, "train", train_idx.size)
    test = Dataset(X[test_idx].copy(), source, "test", test_idx.size)
    return train, test


def subsample_pool(train: Dataset, n_pool: int, seed: int) -> Dataset:
    """Uniform without-replacement pool of n_pool rows from the train split."""
    if n_pool > train.count:
        raise ValueError(f"pool of {n_pool} exceeds the {train.count} available rows")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    idx = np.sort(rng.choice(train.count, size=n_pool, replace=False))
    return Dataset(train.X[idx].copy(), train.source, train.split, n_pool)


def export_pool_csv(path, X: np.ndarray, labels: np.ndarray | None = None) -> None:
    """One row per point, ``x0..x{d-1}`` columns plus optional ``label``."""
    X = np.asarray(X, dtype=np.float64)
    header = [f"x{j}" for j in range(X.shape[1])]
    if labels is not None:
        labels = np.asarray(labels, dtype=np.float64)
        if labels.shape[0] != X.shape[0]:
            raise ValueError("labels length does not match the pool")
        header.append("label")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if labels is not None:
                row.append(repr(float(labels[i])))
            writer.writerow(row)


def load_pool_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverse of export_pool_csv."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        has_label = header and header[-1] == "label"
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows, dtype=np.float64)
    if data.size == 0:
        return np.zeros((0, len(header) - (1 if has_label else 0))), None
    if has_label:
        return data[:, :-1], data[:, -1]
    return data, None
