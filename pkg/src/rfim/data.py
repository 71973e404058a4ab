"""Datasets: IDX files, class subsets, synthetic blobs and seeded minibatches."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
DATA_DIR_ENV = "RFIM_DATA_DIR"

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxError(ValueError):
    pass


class WrongMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # (n, D), values in [0, 1]
    labels: np.ndarray  # (n,) small ints
    class_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.size:
            raise ValueError("features must be (n, D) with one label per row")
        if not self.class_names:
            self.class_names = [str(c) for c in range(int(self.labels.max(initial=-1)) + 1)]

    def __len__(self):
        return self.labels.size

    @property
    def dim(self):
        return self.features.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], list(self.class_names))


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, magic, ndim):
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file is too short for an IDX header")
    found = struct.unpack(">I", raw[:4])[0]
    if found != magic:
        raise WrongMagicError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: header is truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header < count:
        raise TruncatedFileError(f"{path}: expected {count} data bytes, found {len(raw) - header}")
    data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=header)
    return data.reshape(dims)


def load_idx(images_path, labels_path):
    """Read an IDX image/label pair; pixels are scaled to ``[0, 1]`` by ``/255``."""
    images = _read_idx(images_path, IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    feats = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return Dataset(feats, labels.astype(np.int64), [str(c) for c in range(10)])


def write_idx(ds, images_path, labels_path, shape=None):
    """Write a dataset back to IDX; features are rounded to bytes (``x * 255``)."""
    n, d = ds.features.shape
    rows, cols = shape or (1, d)
    if rows * cols != d:
        raise ValueError(f"image shape {rows}x{cols} does not match {d} features")
    pixels = np.rint(ds.features * 255.0).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, n))
        fh.write(ds.labels.astype(np.uint8).tobytes())


def find_mnist(kind="train", data_dir=None):
    """Locate MNIST IDX files in ``data_dir`` or ``$RFIM_DATA_DIR``; ``None`` if absent."""
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV)
    if not data_dir:
        return None
    base = Path(data_dir)
    img, lab = MNIST_FILES[kind]
    for suffix in ("", ".gz"):
        pi, pl = base / (img + suffix), base / (lab + suffix)
        if pi.exists() and pl.exists():
            return pi, pl
    return None


def load_mnist(kind="train", data_dir=None):
    found = find_mnist(kind, data_dir)
    if found is None:
        raise FileNotFoundError(f"MNIST {kind} files not found; set ${DATA_DIR_ENV}")
    return load_idx(*found)


def binary_subset(ds, class_a, class_b):
    """Keep classes ``a`` and ``b`` in their original order, relabelled to 0 and 1."""
    if class_a == class_b:
        raise ValueError("the two classes must differ")
    for c in (class_a, class_b):
        if not np.any(ds.labels == c):
            raise ValueError(f"class {c} is not present")
    idx = np.flatnonzero((ds.labels == class_a) | (ds.labels == class_b))
    labels = (ds.labels[idx] == class_b).astype(np.int64)
    return Dataset(ds.features[idx], labels, [str(class_a), str(class_b)])


def synth_blobs(n, dim, separation, seed=0):
    """Two unit-variance Gaussian clusters at ``-/+ separation/2`` on the first axis.

    Points are mapped into ``[0, 1]`` by the fixed affine map
    ``0.5 + x / (separation + 8)`` and clipped. Labels alternate in a seeded
    random order.
    """
    if n % 2 or n < 2:
        raise ValueError("n must be a positive even number")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    rng.shuffle(labels)
    raw = rng.standard_normal((n, dim))
    raw[:, 0] += np.where(labels == 1, 0.5, -0.5) * separation
    feats = np.clip(0.5 + raw / (separation + 8.0), 0.0, 1.0)
    return Dataset(feats, labels, ["0", "1"])


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def split_indices(n, split):
    perm = np.random.default_rng(split.seed).permutation(n)
    cut = int(round(split.train_fraction * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def train_test_split(ds, split):
    tr, te = split_indices(len(ds), split)
    return ds.subset(tr), ds.subset(te)


def minibatches(n, batch_size, seed, epoch):
    """Index batches of a seeded permutation; the last batch may be short.

    ``n`` is a sample count or anything with a length, such as a :class:`Dataset`.
    """
    n = n if isinstance(n, (int, np.integer)) else len(n)
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]
